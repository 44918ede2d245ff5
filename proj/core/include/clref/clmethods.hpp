#pragma once

// The unified continual-learning objective
//
//   L = CE(x, y) + alpha * D_phi(h(x), z) + beta * D_psi(theta, theta_old)
//
// and the method presets that instantiate it, plus the replay buffer the
// memory-based presets draw from.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "clref/fisher.hpp"
#include "clref/linalg.hpp"
#include "clref/nn.hpp"

namespace clref::cl {

struct ReplayItem {
  std::vector<double> input;
  int label = 0;
  std::vector<double> logits;  // network output when the item was stored
  int source_task = 0;

  friend bool operator==(const ReplayItem&, const ReplayItem&) = default;
};

/// Fixed-capacity reservoir (Algorithm R). Holds its own engine so that the
/// retention decisions are reproducible from `seed`.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  /// While fewer than `capacity` items have been seen the item is appended;
  /// afterwards j ~ U{0..seen_count} and slot j is overwritten if j < capacity.
  void insert(ReplayItem item);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::uint64_t seen_count() const { return seen_; }
  const std::vector<ReplayItem>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::vector<ReplayItem> items_;
  std::uint64_t seen_ = 0;
  std::mt19937_64 rng_;
};

ReplayBuffer reservoir_insert(ReplayBuffer buffer, ReplayItem item);

/// Items drawn from a buffer, laid out for a forward pass.
struct ReplaySample {
  nn::Batch batch;
  Matrix stored_logits;
};

/// min(count, size) distinct items, uniformly without replacement.
ReplaySample sample_replay(const ReplayBuffer& buffer, std::size_t count, std::mt19937_64& rng);

enum class Method { finetune, er, derpp, oewc, cpr, joint };

/// Argument order of the output-space divergence.
///   target_first: D(target, model output), e.g. D(one-hot y, g(x)) for ER.
///   model_first:  D(model output, target), e.g. D(g(x), uniform) for CPR.
enum class KlOrder { model_first, target_first };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
std::string_view to_string(KlOrder k);
KlOrder kl_order_from_string(std::string_view s);

struct ObjectiveConfig {
  Method method = Method::finetune;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t replay_batch_size = 32;
  KlOrder kl_order = KlOrder::target_first;
  /// Weight of the DER++ replay cross-entropy term; defaults to alpha.
  std::optional<double> derpp_ce_weight;
  /// Weight-space reference, set by consolidation (oewc, or cpr with beta > 0).
  std::optional<ParamVector> theta_old;
  std::optional<fisher::DiagFisher> fisher;

  /// Default settings for a method, with the divergence order its
  /// derivation uses (ER: target_first; CPR: model_first).
  static ObjectiveConfig preset(Method method, double alpha = 0.0, double beta = 0.0);
  void validate() const;
  bool uses_replay() const { return method == Method::er || method == Method::derpp; }
  bool uses_weight_penalty() const;
  double second_replay_weight() const { return derpp_ce_weight.value_or(alpha); }

  friend bool operator==(const ObjectiveConfig&, const ObjectiveConfig&) = default;
};

/// Replay draws for one step. ER uses `primary`; DER++ uses `primary` for
/// the logit term and an independent `secondary` for the label term.
struct ReplayDraw {
  std::optional<ReplaySample> primary;
  std::optional<ReplaySample> secondary;
};

ReplayDraw draw_replay(const ReplayBuffer& buffer, const ObjectiveConfig& config, std::mt19937_64& rng);

struct ObjectiveParts {
  double ce = 0.0;            // current-batch cross-entropy
  double output_space = 0.0;  // alpha * D_phi term (ER replay CE, DER logit match, CPR entropy)
  double replay_ce = 0.0;     // DER++ second replay term
  double weight_space = 0.0;  // beta * D_psi term

  double total() const { return ce + output_space + replay_ce + weight_space; }
};

struct ClLossGrad {
  double loss = 0.0;
  ParamVector grad;
  ObjectiveParts parts;
};

/// Loss and exact gradient of the preset's objective. Terms whose weight is
/// zero, or whose replay draw is empty, are not evaluated at all.
/// `joint` is plain cross-entropy: the caller supplies batches drawn from
/// the union of all tasks seen so far.
ClLossGrad cl_loss_and_grad(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const ReplayDraw& replay, const ObjectiveConfig& config);

/// Draws the replay sample from `buffer` with `rng`, then evaluates.
ClLossGrad cl_loss_and_grad(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const ReplayBuffer& buffer, const ObjectiveConfig& config, std::mt19937_64& rng);

/// Same objective without the gradient.
double cl_loss(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
               const ReplayDraw& replay, const ObjectiveConfig& config);

struct Consolidation {
  ParamVector theta_old;
  fisher::DiagFisher fisher;
};

/// Online EWC bookkeeping: theta_old := params, F := decay * F_prev + F_task.
/// An empty F_prev means no earlier consolidation.
Consolidation consolidate_oewc(const std::optional<ParamVector>& theta_old_prev,
                               const std::optional<fisher::DiagFisher>& fisher_prev, const ParamVector& params,
                               const fisher::DiagFisher& fisher_task, double decay);

/// params - lr * (alpha F + beta I)^{-1} grad, with F diagonal.
ParamVector natural_gradient_step(const ParamVector& params, const ParamVector& grad,
                                  const fisher::DiagFisher& fisher, double alpha, double beta, double lr);

}  // namespace clref::cl
