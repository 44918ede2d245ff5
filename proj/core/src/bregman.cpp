#include "clref/bregman.hpp"

#include <cmath>
#include <limits>

#include "clref/error.hpp"

namespace clref::bregman {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }
}  // namespace

Potential Potential::neg_entropy() { return Potential(PotentialKind::neg_entropy); }
Potential Potential::squared_norm() { return Potential(PotentialKind::squared_norm); }

Potential Potential::fisher_quadratic(std::vector<double> fisher) {
  for (double f : fisher) require(std::isfinite(f) && f >= 0.0, "fisher_quadratic: F entries must be >= 0");
  return Potential(PotentialKind::fisher_quadratic, std::move(fisher));
}

std::vector<double> to_simplex(std::span<const double> p) {
  require(!p.empty(), "simplex: empty vector");
  double sum = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, "simplex: entries must be finite and nonnegative");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kSimplexTolerance, "simplex: entries do not sum to 1");
  std::vector<double> out(p.begin(), p.end());
  for (double& v : out) v /= sum;
  return out;
}

double Potential::value(std::span<const double> p) const {
  double s = 0.0;
  switch (kind_) {
    case PotentialKind::neg_entropy:
      for (double v : p) s += xlogx(v);
      return s;
    case PotentialKind::squared_norm:
      for (double v : p) s += v * v;
      return s;
    case PotentialKind::fisher_quadratic:
      require(p.size() == fisher_.size(), "fisher_quadratic: length mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) s += fisher_[i] * p[i] * p[i];
      return 0.5 * s;
  }
  return s;
}

std::vector<double> Potential::gradient(std::span<const double> p) const {
  std::vector<double> g(p.size());
  switch (kind_) {
    case PotentialKind::neg_entropy:
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = p[i] > 0.0 ? std::log(p[i]) + 1.0 : -kInf;
      break;
    case PotentialKind::squared_norm:
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0 * p[i];
      break;
    case PotentialKind::fisher_quadratic:
      require(p.size() == fisher_.size(), "fisher_quadratic: length mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = fisher_[i] * p[i];
      break;
  }
  return g;
}

double divergence(const Potential& phi, std::span<const double> p_in, std::span<const double> q_in) {
  require(p_in.size() == q_in.size(), "divergence: p and q differ in length");
  if (phi.kind() != PotentialKind::neg_entropy) {
    const std::vector<double> grad_q = phi.gradient(q_in);
    double inner = 0.0;
    for (std::size_t i = 0; i < p_in.size(); ++i) inner += grad_q[i] * (p_in[i] - q_in[i]);
    return phi.value(p_in) - phi.value(q_in) - inner;
  }

  const std::vector<double> p = to_simplex(p_in);
  const std::vector<double> q = to_simplex(q_in);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (q[i] == 0.0 && p[i] > 0.0) return kInf;
  // Coordinates with q_i = 0 (hence p_i = 0) contribute nothing to any term.
  const std::vector<double> grad_q = phi.gradient(q);
  double inner = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (q[i] > 0.0) inner += grad_q[i] * (p[i] - q[i]);
  return phi.value(p) - phi.value(q) - inner;
}

double kl_discrete(std::span<const double> p_in, std::span<const double> q_in) {
  require(p_in.size() == q_in.size(), "kl_discrete: p and q differ in length");
  const std::vector<double> p = to_simplex(p_in);
  const std::vector<double> q = to_simplex(q_in);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

double entropy(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s -= xlogx(v);
  return s;
}

}  // namespace clref::bregman
