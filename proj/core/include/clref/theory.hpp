#pragma once

// Numerical check that one noise-free refresh step descends along the
// gradient of a Fisher-weighted gradient-norm penalty:
//
//   grad L(theta + s delta),  delta = F^{-1} g / ||g||,   g = grad L(theta)
//     ~  grad [ L(theta) + sigma ||F^{-1} grad L(theta)|| ]   with sigma = s.
//
// The penalty's outer gradient is taken by central differences, so no
// Hessian is ever formed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "clref/clmethods.hpp"
#include "clref/fisher.hpp"
#include "clref/linalg.hpp"
#include "clref/nn.hpp"

namespace clref::theory {

using ScalarFn = std::function<double(const ParamVector&)>;
using GradFn = std::function<ParamVector(const ParamVector&)>;

/// Central differences (f(t + h e_i) - f(t - h e_i)) / 2h. Throws
/// NumericError naming the coordinate if f is non-finite.
ParamVector fd_gradient(const ScalarFn& f, const ParamVector& params, double step);

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(const ParamVector& a, const ParamVector& b);

/// A loss with its analytic gradient.
struct Objective {
  ScalarFn loss;
  GradFn grad;
};

/// The preset objective on a fixed batch and replay draw.
Objective make_objective(const nn::NetworkSpec& spec, const nn::Batch& batch, const cl::ReplayDraw& replay,
                         const cl::ObjectiveConfig& config);

/// 1/2 t^T A t + b^T t with A symmetric (row-major, dim x dim).
Objective make_quadratic(std::vector<double> a, std::vector<double> b);

/// grad L + sigma * grad ||F^{-1} grad L||. Throws DegenerateError when
/// ||F^{-1} grad L|| < 1e-12.
ParamVector penalty_gradient(const Objective& objective, const ParamVector& params, const fisher::DiagFisher& fisher,
                             double sigma, double step);
ParamVector penalty_gradient(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                             const cl::ObjectiveConfig& config, const fisher::DiagFisher& fisher, double sigma,
                             double step);

/// grad L(theta + s F^{-1} g / ||g||). Throws DegenerateError when ||g|| < 1e-12.
ParamVector refresh_direction(const Objective& objective, const ParamVector& params,
                              const fisher::DiagFisher& fisher, double s);
ParamVector refresh_direction(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                              const cl::ObjectiveConfig& config, const fisher::DiagFisher& fisher, double s);

enum class FisherSource {
  identity,   // F = 1
  isotropic,  // F = c, c drawn per instance
  empirical,  // empirical Fisher of the instance's batch (MLP instances)
  random,     // independent positive entries
};

std::string_view to_string(FisherSource f);
FisherSource fisher_source_from_string(std::string_view s);

struct InstanceResult {
  std::size_t id = 0;
  double cosine = 0.0;             // cos(refresh gradient, penalty gradient)
  double relative_norm_gap = 0.0;  // ||r - p|| / ||p||
  double correction_cosine = 0.0;  // cos(r - g, p - g): the first-order terms alone
};

struct TheoryReport {
  double cosine_similarity = 0.0;  // mean over non-degenerate instances
  double min_cosine = 0.0;
  double relative_norm_gap = 0.0;  // mean
  double s = 0.0;
  double sigma = 0.0;
  std::string instance_descriptor;
  std::vector<InstanceResult> instances;
  std::size_t degenerate = 0;
  /// gamma = s / ||g|| maps the normalized displacement back onto the
  /// unnormalized unlearning rate; mean over instances.
  double equivalent_gamma = 0.0;
};

struct TheoryOptions {
  std::size_t instances = 20;
  std::size_t batch_size = 8;
  double fd_step = 1e-5;
  double damping = fisher::kDefaultDamping;
};

/// Random tiny-MLP instances of `spec` (cross-entropy objective, random
/// inputs and labels), seeded from `seed`.
TheoryReport verify_theorem(const nn::NetworkSpec& spec, std::uint64_t seed, FisherSource source, double s,
                            double sigma, const TheoryOptions& options = {});

/// Random strictly convex quadratic instances of dimension `dim`.
TheoryReport verify_theorem_quadratic(std::size_t dim, std::uint64_t seed, FisherSource source, double s,
                                      double sigma, const TheoryOptions& options = {});

struct GradCheckReport {
  cl::Method method = cl::Method::finetune;
  std::size_t instances = 0;
  double max_relative_error = 0.0;
  std::size_t worst_instance = 0;
};

/// Compares the analytic gradient of a preset's full objective (replay
/// draws, stored logits and weight-space reference filled in at random)
/// against fd_gradient on `instances` seeded tiny tanh networks.
GradCheckReport check_preset_gradient(cl::Method method, std::uint64_t seed, std::size_t instances = 50,
                                      double step = 1e-5);

}  // namespace clref::theory
