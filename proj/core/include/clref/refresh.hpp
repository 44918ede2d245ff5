#pragma once

// Refresh learning: before a descent step, take J Fisher-preconditioned,
// noisy *ascent* steps on the current objective,
//
//   theta^j = theta^{j-1} + gamma F^{-1} grad L(theta^{j-1}) + N(0, 2 gamma F^{-1}),
//
// then descend from the original parameters along grad L(theta^J).

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

#include "clref/clmethods.hpp"
#include "clref/fisher.hpp"
#include "clref/linalg.hpp"
#include "clref/nn.hpp"

namespace clref::refresh {

/// Which loss the unlearn steps ascend.
enum class UnlearnTarget {
  full_objective,  // the active preset's whole objective
  ce_only,         // only the current-batch cross-entropy
};

std::string_view to_string(UnlearnTarget t);
UnlearnTarget unlearn_target_from_string(std::string_view s);

struct RefreshConfig {
  double gamma = 0.03;
  int steps = 1;     // J
  int interval = 2;  // refresh on iterations that are multiples of this (1-based)
  bool noise_enabled = true;
  /// Multiplies the noise variance: N(0, 2 gamma T F^{-1}). T = 1 is the
  /// Langevin discretization as written.
  double noise_temperature = 1.0;
  std::uint64_t rng_seed = 0;
  /// Max infinity-norm of gamma F^{-1} g in one unlearn step; larger
  /// displacements are rescaled down to it.
  double displacement_cap = 1.0;
  UnlearnTarget target = UnlearnTarget::full_objective;

  void validate() const;

  friend bool operator==(const RefreshConfig&, const RefreshConfig&) = default;
};

using GradFn = std::function<ParamVector(const ParamVector&)>;

struct UnlearnResult {
  ParamVector params;
  bool capped = false;
};

/// One ascent step. `rng` is only touched when noise is enabled.
UnlearnResult unlearn_step(const ParamVector& params, const GradFn& grad_fn, const fisher::DiagFisher& fisher,
                           const RefreshConfig& config, std::mt19937_64& rng);

/// theta + (1/alpha) F^{-1} grad: the noise-free, closed-form unlearning update.
ParamVector deterministic_unlearn(const ParamVector& params, const ParamVector& grad,
                                  const fisher::DiagFisher& fisher, double alpha);

enum class StepKind { plain, refresh };

struct StepDiagnostics {
  StepKind kind = StepKind::plain;
  double loss = 0.0;        // objective where the applied gradient was taken
  double start_loss = 0.0;  // objective at the incoming parameters
  int capped_steps = 0;
  cl::ObjectiveParts parts;
};

struct StepResult {
  ParamVector params;
  StepDiagnostics diagnostics;
};

/// The base method's step: params - lr * grad L(params).
StepResult plain_train_step(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const cl::ReplayDraw& replay, const cl::ObjectiveConfig& objective, double lr);

/// Refresh on iterations where iteration_index % interval == 0, otherwise
/// a plain step. The batch and replay draw are held fixed across the J
/// unlearn evaluations and the relearn evaluation.
StepResult refresh_train_step(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                              const cl::ReplayDraw& replay, const cl::ObjectiveConfig& objective,
                              const fisher::DiagFisher& fisher, const RefreshConfig& config, double lr,
                              std::uint64_t iteration_index, std::mt19937_64& rng);

}  // namespace clref::refresh
