#pragma once

// Dense feed-forward classifier with hand-written backpropagation.
//
// Parameter layout, per layer l with fan_in = sizes[l], fan_out = sizes[l+1]:
// a fan_in x fan_out row-major weight block followed by fan_out biases.
// Hidden layers apply the activation; the last layer emits raw logits.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clref/linalg.hpp"

namespace clref::nn {

enum class Activation { relu, tanh };

struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
  Activation activation = Activation::relu;

  /// Throws ContractError unless there are >= 2 sizes, all positive.
  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  /// Sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;
  /// Offset of layer l's weight block in the flat vector.
  std::size_t layer_offset(std::size_t layer) const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Inputs (n x d) and class labels in [0, C).
struct Batch {
  Matrix inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void validate(const NetworkSpec& spec) const;
};

/// Rows `indices` of `source`, in order.
Batch gather(const Batch& source, std::span<const std::size_t> indices);

/// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Post-activation outputs of every layer for one forward pass; the last
/// entry holds the logits. Needed by `backward`.
struct ForwardTrace {
  Matrix inputs;
  std::vector<Matrix> outputs;

  const Matrix& logits() const { return outputs.back(); }
};

ForwardTrace forward_trace(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs);

Matrix forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs);

/// grad += d(sum of rows' losses)/d(params), where `dlogits` holds the
/// loss gradient with respect to each row's logits.
void backward(const NetworkSpec& spec, const ParamVector& params, const ForwardTrace& trace,
              const Matrix& dlogits, ParamVector& grad);

/// out += sum over rows of the elementwise square of each row's own
/// parameter gradient, given that row's logit gradient in `dlogits`.
void backward_squared(const NetworkSpec& spec, const ParamVector& params, const ForwardTrace& trace,
                      const Matrix& dlogits, ParamVector& out);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean softmax cross-entropy over `logits` rows, and its gradient with
/// respect to the logits (already divided by the row count).
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits);

LossGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

double accuracy(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

/// Row-wise softmax.
Matrix softmax(const Matrix& logits);

}  // namespace clref::nn
