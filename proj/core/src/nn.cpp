#include "clref/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "clref/error.hpp"

namespace clref::nn {

void NetworkSpec::validate() const {
  require(layer_sizes.size() >= 2, "NetworkSpec: need at least an input and an output layer");
  for (std::size_t s : layer_sizes) require(s >= 1, "NetworkSpec: layer sizes must be positive");
}

std::size_t NetworkSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

std::size_t NetworkSpec::layer_offset(std::size_t layer) const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer; ++l) n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

void Batch::validate(const NetworkSpec& spec) const {
  require(!labels.empty(), "Batch: empty");
  require(inputs.rows == labels.size(), "Batch: input rows and label count differ");
  require(inputs.cols == spec.input_dim(), "Batch: input width does not match network input dim");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < spec.num_classes(), "Batch: label out of range");
}

Batch gather(const Batch& source, std::span<const std::size_t> indices) {
  Batch out;
  out.inputs = Matrix(indices.size(), source.inputs.cols);
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = source.inputs.row(indices[k]);
    std::copy(src.begin(), src.end(), out.inputs.row(k).begin());
    out.labels.push_back(source.labels[indices[k]]);
  }
  return out;
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params(spec.param_count());
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l];
    const std::size_t fan_out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t offset = spec.layer_offset(l);
    for (std::size_t k = 0; k < fan_in * fan_out; ++k) params[offset + k] = dist(rng);
  }
  return params;
}

namespace {

void check_shapes(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs) {
  spec.validate();
  require(params.size() == spec.param_count(), "forward: parameter count does not match spec");
  require(inputs.cols == spec.input_dim(), "forward: input width does not match spec");
}

// out = in * W + b, then the activation for hidden layers.
void affine(const Matrix& in, const double* weights, const double* bias, std::size_t fan_out, Matrix& out) {
  out = Matrix(in.rows, fan_out);
  for (std::size_t n = 0; n < in.rows; ++n) {
    double* o = out.row(n).data();
    std::copy(bias, bias + fan_out, o);
    const auto x = in.row(n);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = x[i];
      if (a == 0.0) continue;
      const double* w = weights + i * fan_out;
      for (std::size_t j = 0; j < fan_out; ++j) o[j] += a * w[j];
    }
  }
}

void activate(Activation act, Matrix& m) {
  if (act == Activation::relu) {
    for (double& v : m.data) v = v > 0.0 ? v : 0.0;
  } else {
    for (double& v : m.data) v = std::tanh(v);
  }
}

}  // namespace

ForwardTrace forward_trace(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs) {
  check_shapes(spec, params, inputs);
  ForwardTrace trace;
  trace.inputs = inputs;
  trace.outputs.resize(spec.num_layers());
  const Matrix* in = &trace.inputs;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l];
    const std::size_t fan_out = spec.layer_sizes[l + 1];
    const double* w = params.data() + spec.layer_offset(l);
    affine(*in, w, w + fan_in * fan_out, fan_out, trace.outputs[l]);
    if (!all_finite(trace.outputs[l].data))
      throw NumericError("non-finite activation at layer " + std::to_string(l), l);
    if (l + 1 < spec.num_layers()) activate(spec.activation, trace.outputs[l]);
    in = &trace.outputs[l];
  }
  return trace;
}

Matrix forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs) {
  return std::move(forward_trace(spec, params, inputs).outputs.back());
}

namespace {

// Squared = true accumulates per-row squared gradients instead of their sum.
template <bool Squared>
void backpropagate(const NetworkSpec& spec, const ParamVector& params, const ForwardTrace& trace,
                   const Matrix& dlogits, ParamVector& grad) {
  require(grad.size() == params.size(), "backward: output buffer has wrong length");
  require(dlogits.rows == trace.inputs.rows && dlogits.cols == spec.num_classes(),
          "backward: logit gradient has wrong shape");
  Matrix delta = dlogits;
  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const std::size_t fan_in = spec.layer_sizes[l];
    const std::size_t fan_out = spec.layer_sizes[l + 1];
    const Matrix& in = l == 0 ? trace.inputs : trace.outputs[l - 1];
    const double* w = params.data() + spec.layer_offset(l);
    double* gw = grad.data() + spec.layer_offset(l);
    double* gb = gw + fan_in * fan_out;

    for (std::size_t n = 0; n < in.rows; ++n) {
      const double* d = delta.row(n).data();
      const auto x = in.row(n);
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double a = x[i];
        if (a == 0.0) continue;
        double* g = gw + i * fan_out;
        if constexpr (Squared) {
          const double a2 = a * a;
          for (std::size_t j = 0; j < fan_out; ++j) g[j] += a2 * d[j] * d[j];
        } else {
          for (std::size_t j = 0; j < fan_out; ++j) g[j] += a * d[j];
        }
      }
      for (std::size_t j = 0; j < fan_out; ++j) gb[j] += Squared ? d[j] * d[j] : d[j];
    }
    if (l == 0) break;

    Matrix prev(in.rows, fan_in);
    for (std::size_t n = 0; n < in.rows; ++n) {
      const double* d = delta.row(n).data();
      const auto post = in.row(n);
      auto p = prev.row(n);
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double* wi = w + i * fan_out;
        double s = 0.0;
        for (std::size_t j = 0; j < fan_out; ++j) s += wi[j] * d[j];
        const double deriv = spec.activation == Activation::relu ? (post[i] > 0.0 ? 1.0 : 0.0)
                                                                 : 1.0 - post[i] * post[i];
        p[i] = s * deriv;
      }
    }
    delta = std::move(prev);
  }
}

}  // namespace

void backward(const NetworkSpec& spec, const ParamVector& params, const ForwardTrace& trace,
              const Matrix& dlogits, ParamVector& grad) {
  backpropagate<false>(spec, params, trace, dlogits, grad);
}

void backward_squared(const NetworkSpec& spec, const ParamVector& params, const ForwardTrace& trace,
                      const Matrix& dlogits, ParamVector& out) {
  backpropagate<true>(spec, params, trace, dlogits, out);
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits) {
  require(logits.rows == labels.size() && logits.rows > 0, "softmax_cross_entropy: shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  if (dlogits) *dlogits = Matrix(logits.rows, logits.cols);
  double total = 0.0;
  for (std::size_t n = 0; n < logits.rows; ++n) {
    const auto u = logits.row(n);
    const double m = *std::max_element(u.begin(), u.end());
    double z = 0.0;
    for (double v : u) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    const auto y = static_cast<std::size_t>(labels[n]);
    total += log_z - u[y];
    if (dlogits) {
      auto g = dlogits->row(n);
      for (std::size_t c = 0; c < u.size(); ++c) g[c] = std::exp(u[c] - log_z) * inv_n;
      g[y] -= inv_n;
    }
  }
  return total * inv_n;
}

LossGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
  batch.validate(spec);
  const ForwardTrace trace = forward_trace(spec, params, batch.inputs);
  Matrix dlogits;
  LossGrad out;
  out.loss = softmax_cross_entropy(trace.logits(), batch.labels, &dlogits);
  if (!std::isfinite(out.loss)) throw NumericError("non-finite cross-entropy loss", spec.num_layers() - 1);
  out.grad = ParamVector(params.size());
  backward(spec, params, trace, dlogits, out.grad);
  return out;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  require(params.size() == grad.size(), "sgd_step: length mismatch");
  ParamVector out = params;
  axpy(-lr, grad.span(), out.span());
  return out;
}

std::size_t argmax(std::span<const double> row) {
  require(!row.empty(), "argmax: empty row");
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

double accuracy(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
  require(batch.size() > 0, "accuracy: empty batch");
  batch.validate(spec);
  const Matrix logits = forward(spec, params, batch.inputs);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < logits.rows; ++n)
    if (argmax(logits.row(n)) == static_cast<std::size_t>(batch.labels[n])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(batch.size());
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t n = 0; n < logits.rows; ++n) {
    const auto u = logits.row(n);
    const double m = *std::max_element(u.begin(), u.end());
    double z = 0.0;
    auto out = p.row(n);
    for (std::size_t c = 0; c < u.size(); ++c) z += (out[c] = std::exp(u[c] - m));
    for (double& v : out) v /= z;
  }
  return p;
}

}  // namespace clref::nn
