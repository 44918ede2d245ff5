#include "clref/refresh.hpp"

#include <cmath>
#include <string>

#include "clref/error.hpp"

namespace clref::refresh {

std::string_view to_string(UnlearnTarget t) { return t == UnlearnTarget::ce_only ? "ce_only" : "full_objective"; }

UnlearnTarget unlearn_target_from_string(std::string_view s) {
  if (s == "full_objective") return UnlearnTarget::full_objective;
  if (s == "ce_only") return UnlearnTarget::ce_only;
  throw ContractError("unknown unlearn target '" + std::string(s) + "'");
}

void RefreshConfig::validate() const {
  require(std::isfinite(gamma) && gamma >= 0.0, "RefreshConfig: gamma must be finite and >= 0");
  require(steps >= 0, "RefreshConfig: steps must be >= 0");
  require(interval >= 1, "RefreshConfig: interval must be >= 1");
  require(std::isfinite(noise_temperature) && noise_temperature >= 0.0,
          "RefreshConfig: noise_temperature must be finite and >= 0");
  require(displacement_cap > 0.0, "RefreshConfig: displacement_cap must be positive");
}

UnlearnResult unlearn_step(const ParamVector& params, const GradFn& grad_fn, const fisher::DiagFisher& fisher,
                           const RefreshConfig& config, std::mt19937_64& rng) {
  config.validate();
  require(fisher.size() == params.size(), "unlearn_step: Fisher and params differ in length");
  UnlearnResult out{params, false};
  if (config.gamma == 0.0) return out;

  ParamVector step = fisher::precondition(fisher, grad_fn(params));
  require(step.size() == params.size(), "unlearn_step: gradient has the wrong length");
  for (double& v : step) v *= config.gamma;
  const double peak = norm_inf(step.span());
  if (peak > config.displacement_cap) {
    const double shrink = config.displacement_cap / peak;
    for (double& v : step) v *= shrink;
    out.capped = true;
  }
  for (std::size_t i = 0; i < params.size(); ++i) out.params[i] += step[i];

  if (config.noise_enabled && config.noise_temperature > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double variance = 2.0 * config.gamma * config.noise_temperature;
    for (std::size_t i = 0; i < params.size(); ++i)
      out.params[i] += std::sqrt(variance / (fisher.values[i] + fisher.damping)) * normal(rng);
  }
  const std::size_t bad = first_non_finite(out.params.span());
  if (bad != out.params.size())
    throw NumericError("unlearn_step: non-finite parameter at index " + std::to_string(bad), bad);
  return out;
}

ParamVector deterministic_unlearn(const ParamVector& params, const ParamVector& grad,
                                  const fisher::DiagFisher& fisher, double alpha) {
  require(alpha > 0.0, "deterministic_unlearn: alpha must be positive");
  require(params.size() == grad.size() && grad.size() == fisher.size(), "deterministic_unlearn: length mismatch");
  const double gamma = 1.0 / alpha;
  ParamVector step = fisher::precondition(fisher, grad);
  ParamVector out = params;
  for (std::size_t i = 0; i < params.size(); ++i) out[i] += gamma * step[i];
  return out;
}

StepResult plain_train_step(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const cl::ReplayDraw& replay, const cl::ObjectiveConfig& objective, double lr) {
  cl::ClLossGrad lg = cl::cl_loss_and_grad(spec, params, batch, replay, objective);
  StepResult out;
  out.params = nn::sgd_step(params, lg.grad, lr);
  out.diagnostics.kind = StepKind::plain;
  out.diagnostics.loss = lg.loss;
  out.diagnostics.start_loss = lg.loss;
  out.diagnostics.parts = lg.parts;
  return out;
}

StepResult refresh_train_step(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                              const cl::ReplayDraw& replay, const cl::ObjectiveConfig& objective,
                              const fisher::DiagFisher& fisher, const RefreshConfig& config, double lr,
                              std::uint64_t iteration_index, std::mt19937_64& rng) {
  config.validate();
  if (config.steps == 0 || iteration_index % static_cast<std::uint64_t>(config.interval) != 0)
    return plain_train_step(spec, params, batch, replay, objective, lr);

  cl::ObjectiveConfig unlearn_objective = objective;
  if (config.target == UnlearnTarget::ce_only) {
    unlearn_objective = cl::ObjectiveConfig::preset(cl::Method::finetune);
  }
  const cl::ReplayDraw no_replay;
  const cl::ReplayDraw& unlearn_replay = config.target == UnlearnTarget::ce_only ? no_replay : replay;

  StepResult out;
  out.diagnostics.kind = StepKind::refresh;
  bool have_start = false;
  const GradFn grad_fn = [&](const ParamVector& p) {
    cl::ClLossGrad lg = cl::cl_loss_and_grad(spec, p, batch, unlearn_replay, unlearn_objective);
    if (!have_start) {
      out.diagnostics.start_loss = lg.loss;
      have_start = true;
    }
    return std::move(lg.grad);
  };

  ParamVector probe = params;
  for (int j = 0; j < config.steps; ++j) {
    UnlearnResult r = unlearn_step(probe, grad_fn, fisher, config, rng);
    probe = std::move(r.params);
    if (r.capped) ++out.diagnostics.capped_steps;
  }

  cl::ClLossGrad relearn = cl::cl_loss_and_grad(spec, probe, batch, replay, objective);
  if (!have_start) out.diagnostics.start_loss = relearn.loss;
  out.params = nn::sgd_step(params, relearn.grad, lr);
  out.diagnostics.loss = relearn.loss;
  out.diagnostics.parts = relearn.parts;
  return out;
}

}  // namespace clref::refresh
