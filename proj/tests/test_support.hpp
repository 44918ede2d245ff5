#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "clref/linalg.hpp"
#include "clref/nn.hpp"

namespace clref::testing {

inline nn::Batch random_batch(const nn::NetworkSpec& spec, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(spec.num_classes()) - 1);
  nn::Batch b{Matrix(n, spec.input_dim()), {}};
  for (double& v : b.inputs.data) v = normal(rng);
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(label(rng));
  return b;
}

inline ParamVector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ParamVector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& x : p) s += (x = e(rng));
  for (double& x : p) x /= s;
  return p;
}

/// Central differences, written out independently of the library version.
template <typename F>
ParamVector central_differences(F&& f, const ParamVector& x, double h = 1e-5) {
  ParamVector g(x.size());
  ParamVector p = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_error(const ParamVector& a, const ParamVector& b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(num) / scale;
}

}  // namespace clref::testing
