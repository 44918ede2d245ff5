#include <algorithm>
#include <numeric>

#include "clref/clmethods.hpp"
#include "clref/error.hpp"

namespace clref::cl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  require(capacity >= 1, "ReplayBuffer: capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::insert(ReplayItem item) {
  require(all_finite(item.input) && all_finite(item.logits), "ReplayBuffer: item has non-finite values");
  if (items_.size() < capacity_) {
    items_.push_back(std::move(item));
  } else {
    std::uniform_int_distribution<std::uint64_t> pick(0, seen_);
    const std::uint64_t j = pick(rng_);
    if (j < capacity_) items_[j] = std::move(item);
  }
  ++seen_;
}

ReplayBuffer reservoir_insert(ReplayBuffer buffer, ReplayItem item) {
  buffer.insert(std::move(item));
  return buffer;
}

ReplaySample sample_replay(const ReplayBuffer& buffer, std::size_t count, std::mt19937_64& rng) {
  require(!buffer.empty(), "sample_replay: buffer is empty");
  const auto& items = buffer.items();
  const std::size_t m = std::min(count, items.size());
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }

  const std::size_t dim = items.front().input.size();
  const std::size_t classes = items.front().logits.size();
  ReplaySample out;
  out.batch.inputs = Matrix(m, dim);
  out.batch.labels.resize(m);
  out.stored_logits = Matrix(m, classes);
  for (std::size_t k = 0; k < m; ++k) {
    const ReplayItem& it = items[idx[k]];
    std::copy(it.input.begin(), it.input.end(), out.batch.inputs.row(k).begin());
    std::copy(it.logits.begin(), it.logits.end(), out.stored_logits.row(k).begin());
    out.batch.labels[k] = it.label;
  }
  return out;
}

}  // namespace clref::cl
