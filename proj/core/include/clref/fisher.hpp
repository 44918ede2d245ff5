#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clref/linalg.hpp"
#include "clref/nn.hpp"

namespace clref::fisher {

inline constexpr double kDefaultDamping = 1e-5;
inline constexpr std::size_t kDefaultMaxExamples = 1000;

/// Diagonal Fisher information. `damping` is kept separate from `values`
/// and only enters when the matrix is inverted.
struct DiagFisher {
  std::vector<double> values;
  double damping = kDefaultDamping;

  std::size_t size() const { return values.size(); }
  /// values = 1 everywhere: the preconditioner before any task is consolidated.
  static DiagFisher identity(std::size_t n, double damping = kDefaultDamping);
  void validate() const;

  friend bool operator==(const DiagFisher&, const DiagFisher&) = default;
};

/// Empirical Fisher: mean over the first min(n, max_examples) examples of
/// the squared per-example cross-entropy gradient (ground-truth labels).
/// Examples are taken in order across `data`. With shards > 1 the examples
/// are split into contiguous ranges accumulated on separate threads.
DiagFisher estimate_diag_fisher(const nn::NetworkSpec& spec, const ParamVector& params,
                                std::span<const nn::Batch> data,
                                std::size_t max_examples = kDefaultMaxExamples,
                                double damping = kDefaultDamping, unsigned shards = 1);

/// v_i / (F_i + eps)
ParamVector precondition(const DiagFisher& fisher, const ParamVector& v);

/// sqrt(2 gamma / (F_i + eps)): per-parameter std-dev of the unlearning noise.
std::vector<double> noise_scale(const DiagFisher& fisher, double gamma);

}  // namespace clref::fisher
