#include "clref/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "clref/error.hpp"

namespace clref::fisher {

DiagFisher DiagFisher::identity(std::size_t n, double damping) {
  return DiagFisher{std::vector<double>(n, 1.0), damping};
}

void DiagFisher::validate() const {
  require(std::isfinite(damping) && damping > 0.0, "DiagFisher: damping must be positive");
  for (double v : values) require(std::isfinite(v) && v >= 0.0, "DiagFisher: values must be finite and >= 0");
}

namespace {

struct ExampleRef {
  const nn::Batch* batch;
  std::size_t row;
};

constexpr std::size_t kChunk = 64;

// Sum of squared per-example gradients over refs[begin, end), in chunks.
std::vector<double> accumulate(const nn::NetworkSpec& spec, const ParamVector& params,
                               const std::vector<ExampleRef>& refs, std::size_t begin, std::size_t end) {
  ParamVector acc(params.size());
  for (std::size_t start = begin; start < end; start += kChunk) {
    const std::size_t rows = std::min(kChunk, end - start);
    Matrix inputs(rows, spec.input_dim());
    std::vector<int> labels(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = refs[start + r].batch->inputs.row(refs[start + r].row);
      std::copy(src.begin(), src.end(), inputs.row(r).begin());
      labels[r] = refs[start + r].batch->labels[refs[start + r].row];
    }
    const nn::ForwardTrace trace = nn::forward_trace(spec, params, inputs);
    Matrix dlogits;
    nn::softmax_cross_entropy(trace.logits(), labels, &dlogits);
    // Undo the batch mean: each row carries its own example's gradient.
    for (double& v : dlogits.data) v *= static_cast<double>(rows);
    nn::backward_squared(spec, params, trace, dlogits, acc);
  }
  return {acc.begin(), acc.end()};
}

}  // namespace

DiagFisher estimate_diag_fisher(const nn::NetworkSpec& spec, const ParamVector& params,
                                std::span<const nn::Batch> data, std::size_t max_examples,
                                double damping, unsigned shards) {
  require(params.size() == spec.param_count(), "estimate_diag_fisher: parameter count does not match spec");
  require(max_examples > 0, "estimate_diag_fisher: max_examples must be positive");
  require(shards >= 1, "estimate_diag_fisher: shards must be >= 1");

  std::vector<ExampleRef> refs;
  for (const nn::Batch& b : data) {
    b.validate(spec);
    for (std::size_t r = 0; r < b.size() && refs.size() < max_examples; ++r) refs.push_back({&b, r});
    if (refs.size() == max_examples) break;
  }
  require(!refs.empty(), "estimate_diag_fisher: empty data stream");

  const std::size_t n = refs.size();
  const std::size_t parts = std::min<std::size_t>(shards, n);
  std::vector<std::vector<double>> partial(parts);
  if (parts == 1) {
    partial[0] = accumulate(spec, params, refs, 0, n);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t s = 0; s < parts; ++s) {
      const std::size_t b = n * s / parts;
      const std::size_t e = n * (s + 1) / parts;
      workers.emplace_back([&, s, b, e] { partial[s] = accumulate(spec, params, refs, b, e); });
    }
    for (auto& w : workers) w.join();
  }

  DiagFisher out{std::vector<double>(params.size(), 0.0), damping};
  for (const auto& p : partial)
    for (std::size_t i = 0; i < p.size(); ++i) out.values[i] += p[i];
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : out.values) v *= inv_n;
  out.validate();
  return out;
}

ParamVector precondition(const DiagFisher& fisher, const ParamVector& v) {
  require(fisher.size() == v.size(), "precondition: length mismatch");
  ParamVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / (fisher.values[i] + fisher.damping);
  return out;
}

std::vector<double> noise_scale(const DiagFisher& fisher, double gamma) {
  require(std::isfinite(gamma) && gamma >= 0.0, "noise_scale: gamma must be >= 0");
  std::vector<double> sigma(fisher.size());
  for (std::size_t i = 0; i < sigma.size(); ++i)
    sigma[i] = std::sqrt(2.0 * gamma / (fisher.values[i] + fisher.damping));
  return sigma;
}

}  // namespace clref::fisher
