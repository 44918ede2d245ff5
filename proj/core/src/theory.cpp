#include "clref/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "clref/error.hpp"

namespace clref::theory {

ParamVector fd_gradient(const ScalarFn& f, const ParamVector& params, double step) {
  require(step > 0.0, "fd_gradient: step must be positive");
  ParamVector g(params.size());
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = f(probe);
    probe[i] = params[i] - step;
    const double down = f(probe);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("fd_gradient: non-finite function value at coordinate " + std::to_string(i), i);
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(const ParamVector& a, const ParamVector& b) {
  require(a.size() == b.size(), "relative_error: size mismatch");
  ParamVector d = a;
  axpy(-1.0, b.span(), d.span());
  const double scale = std::max(norm2(a.span()), norm2(b.span()));
  return scale == 0.0 ? 0.0 : norm2(d.span()) / scale;
}

Objective make_objective(const nn::NetworkSpec& spec, const nn::Batch& batch, const cl::ReplayDraw& replay,
                         const cl::ObjectiveConfig& config) {
  return Objective{
      [=](const ParamVector& p) { return cl::cl_loss(spec, p, batch, replay, config); },
      [=](const ParamVector& p) { return cl::cl_loss_and_grad(spec, p, batch, replay, config).grad; },
  };
}

Objective make_quadratic(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  require(a.size() == n * n, "make_quadratic: A must be dim x dim");
  auto grad = [a, b, n](const ParamVector& t) {
    ParamVector g(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * t[j];
      g[i] = s;
    }
    return g;
  };
  auto loss = [a, b, n](const ParamVector& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += a[i * n + j] * t[j];
      s += 0.5 * t[i] * row + b[i] * t[i];
    }
    return s;
  };
  return Objective{loss, grad};
}

ParamVector penalty_gradient(const Objective& objective, const ParamVector& params, const fisher::DiagFisher& fisher,
                             double sigma, double step) {
  require(sigma > 0.0, "penalty_gradient: sigma must be positive");
  const ParamVector g = objective.grad(params);
  if (norm2(fisher::precondition(fisher, g).span()) < 1e-12)
    throw DegenerateError("penalty_gradient: ||F^-1 grad L|| is zero; the norm is not differentiable here");
  const ScalarFn weighted_norm = [&](const ParamVector& p) {
    return norm2(fisher::precondition(fisher, objective.grad(p)).span());
  };
  const ParamVector dnorm = fd_gradient(weighted_norm, params, step);
  ParamVector out = g;
  axpy(sigma, dnorm.span(), out.span());
  return out;
}

ParamVector penalty_gradient(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                             const cl::ObjectiveConfig& config, const fisher::DiagFisher& fisher, double sigma,
                             double step) {
  return penalty_gradient(make_objective(spec, batch, {}, config), params, fisher, sigma, step);
}

ParamVector refresh_direction(const Objective& objective, const ParamVector& params,
                              const fisher::DiagFisher& fisher, double s) {
  const ParamVector g = objective.grad(params);
  const double gnorm = norm2(g.span());
  if (gnorm < 1e-12) throw DegenerateError("refresh_direction: gradient norm is zero");
  ParamVector probe = params;
  const ParamVector delta = fisher::precondition(fisher, g);
  axpy(s / gnorm, delta.span(), probe.span());
  return objective.grad(probe);
}

ParamVector refresh_direction(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                              const cl::ObjectiveConfig& config, const fisher::DiagFisher& fisher, double s) {
  return refresh_direction(make_objective(spec, batch, {}, config), params, fisher, s);
}

std::string_view to_string(FisherSource f) {
  switch (f) {
    case FisherSource::identity: return "identity";
    case FisherSource::isotropic: return "isotropic";
    case FisherSource::empirical: return "empirical";
    case FisherSource::random: return "random";
  }
  return "?";
}

FisherSource fisher_source_from_string(std::string_view s) {
  for (FisherSource f : {FisherSource::identity, FisherSource::isotropic, FisherSource::empirical, FisherSource::random})
    if (to_string(f) == s) return f;
  throw ContractError("unknown Fisher source '" + std::string(s) + "'");
}

namespace {

fisher::DiagFisher synthetic_fisher(FisherSource source, std::size_t n, double damping, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  switch (source) {
    case FisherSource::identity: return fisher::DiagFisher::identity(n, damping);
    case FisherSource::isotropic: return fisher::DiagFisher{std::vector<double>(n, u(rng)), damping};
    case FisherSource::random: {
      fisher::DiagFisher f{std::vector<double>(n), damping};
      for (double& v : f.values) v = u(rng);
      return f;
    }
    case FisherSource::empirical: break;
  }
  throw ContractError("Fisher source 'empirical' needs a network instance");
}

bool compare(const Objective& obj, const ParamVector& params, const fisher::DiagFisher& fisher, double s,
             double sigma, double step, std::size_t id, TheoryReport& report) {
  try {
    const ParamVector g = obj.grad(params);
    const ParamVector r = refresh_direction(obj, params, fisher, s);
    const ParamVector p = penalty_gradient(obj, params, fisher, sigma, step);
    ParamVector rc = r, pc = p, diff = r;
    axpy(-1.0, g.span(), rc.span());
    axpy(-1.0, g.span(), pc.span());
    axpy(-1.0, p.span(), diff.span());
    InstanceResult res;
    res.id = id;
    res.cosine = cosine_similarity(r.span(), p.span());
    res.relative_norm_gap = norm2(diff.span()) / norm2(p.span());
    res.correction_cosine = cosine_similarity(rc.span(), pc.span());
    report.instances.push_back(res);
    report.equivalent_gamma += s / norm2(g.span());
    return true;
  } catch (const DegenerateError&) {
    ++report.degenerate;
    return false;
  }
}

void summarize(TheoryReport& report) {
  const std::size_t n = report.instances.size();
  if (n == 0) return;
  report.min_cosine = 1.0;
  for (const auto& r : report.instances) {
    report.cosine_similarity += r.cosine;
    report.relative_norm_gap += r.relative_norm_gap;
    report.min_cosine = std::min(report.min_cosine, r.cosine);
  }
  report.cosine_similarity /= static_cast<double>(n);
  report.relative_norm_gap /= static_cast<double>(n);
  report.equivalent_gamma /= static_cast<double>(n);
}

}  // namespace

TheoryReport verify_theorem(const nn::NetworkSpec& spec, std::uint64_t seed, FisherSource source, double s,
                            double sigma, const TheoryOptions& options) {
  spec.validate();
  require(s >= 0.0 && sigma > 0.0, "verify_theorem: need s >= 0 and sigma > 0");
  TheoryReport report;
  report.s = s;
  report.sigma = sigma;
  std::ostringstream desc;
  desc << "mlp[";
  for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i) desc << (i ? "," : "") << spec.layer_sizes[i];
  desc << "] " << (spec.activation == nn::Activation::relu ? "relu" : "tanh") << " seed=" << seed
       << " F=" << to_string(source);
  report.instance_descriptor = desc.str();

  const cl::ObjectiveConfig ce = cl::ObjectiveConfig::preset(cl::Method::finetune);
  for (std::size_t k = 0; k < options.instances; ++k) {
    std::mt19937_64 rng(seed * 7727 + k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, static_cast<int>(spec.num_classes()) - 1);
    const ParamVector params = nn::init_params(spec, rng());
    nn::Batch batch{Matrix(options.batch_size, spec.input_dim()), {}};
    for (double& v : batch.inputs.data) v = normal(rng);
    for (std::size_t i = 0; i < options.batch_size; ++i) batch.labels.push_back(label(rng));

    const fisher::DiagFisher f =
        source == FisherSource::empirical
            ? fisher::estimate_diag_fisher(spec, params, std::span<const nn::Batch>(&batch, 1), options.batch_size,
                                           options.damping)
            : synthetic_fisher(source, params.size(), options.damping, rng);
    compare(make_objective(spec, batch, {}, ce), params, f, s, sigma, options.fd_step, k, report);
  }
  summarize(report);
  return report;
}

TheoryReport verify_theorem_quadratic(std::size_t dim, std::uint64_t seed, FisherSource source, double s,
                                      double sigma, const TheoryOptions& options) {
  require(dim >= 1, "verify_theorem_quadratic: dim must be positive");
  require(source != FisherSource::empirical, "verify_theorem_quadratic: no empirical Fisher for a quadratic");
  TheoryReport report;
  report.s = s;
  report.sigma = sigma;
  report.instance_descriptor = "quadratic dim=" + std::to_string(dim) + " seed=" + std::to_string(seed) +
                               " F=" + std::string(to_string(source));
  for (std::size_t k = 0; k < options.instances; ++k) {
    std::mt19937_64 rng(seed * 7727 + k);
    std::normal_distribution<double> normal(0.0, 1.0);
    // A = M M^T / dim + I is symmetric positive definite.
    std::vector<double> m(dim * dim), a(dim * dim, 0.0), b(dim);
    for (double& v : m) v = normal(rng);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < dim; ++l) acc += m[i * dim + l] * m[j * dim + l];
        a[i * dim + j] = acc / static_cast<double>(dim) + (i == j ? 1.0 : 0.0);
      }
    for (double& v : b) v = normal(rng);
    ParamVector params(dim);
    for (double& v : params) v = normal(rng);
    const fisher::DiagFisher f = synthetic_fisher(source, dim, options.damping, rng);
    compare(make_quadratic(a, b), params, f, s, sigma, options.fd_step, k, report);
  }
  summarize(report);
  return report;
}

GradCheckReport check_preset_gradient(cl::Method method, std::uint64_t seed, std::size_t instances, double step) {
  GradCheckReport report;
  report.method = method;
  report.instances = instances;
  for (std::size_t k = 0; k < instances; ++k) {
    std::mt19937_64 rng(seed * 104729 + k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> positive(0.1, 2.0);
    const nn::NetworkSpec spec = k % 2 == 0 ? nn::NetworkSpec{{6, 5, 4}, nn::Activation::tanh}
                                            : nn::NetworkSpec{{5, 4, 4, 3}, nn::Activation::tanh};
    const auto classes = static_cast<int>(spec.num_classes());
    std::uniform_int_distribution<int> label(0, classes - 1);
    auto random_batch = [&](std::size_t n) {
      nn::Batch b{Matrix(n, spec.input_dim()), {}};
      for (double& v : b.inputs.data) v = normal(rng);
      for (std::size_t i = 0; i < n; ++i) b.labels.push_back(label(rng));
      return b;
    };
    auto random_sample = [&](std::size_t n) {
      cl::ReplaySample s{random_batch(n), Matrix(n, spec.num_classes())};
      for (double& v : s.stored_logits.data) v = normal(rng);
      return s;
    };

    const ParamVector params = nn::init_params(spec, rng());
    const nn::Batch batch = random_batch(5);
    cl::ObjectiveConfig config = cl::ObjectiveConfig::preset(method, 0.7, 0.4);
    cl::ReplayDraw draw;
    if (config.uses_replay()) {
      draw.primary = random_sample(4);
      if (method == cl::Method::derpp) draw.secondary = random_sample(3);
    }
    if (config.uses_weight_penalty()) {
      ParamVector old(params.size());
      fisher::DiagFisher f{std::vector<double>(params.size()), fisher::kDefaultDamping};
      for (std::size_t i = 0; i < params.size(); ++i) {
        old[i] = params[i] + 0.3 * normal(rng);
        f.values[i] = positive(rng);
      }
      config.theta_old = std::move(old);
      config.fisher = std::move(f);
    }

    const Objective obj = make_objective(spec, batch, draw, config);
    const double err = relative_error(obj.grad(params), fd_gradient(obj.loss, params, step));
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_instance = k;
    }
  }
  return report;
}

}  // namespace clref::theory
