#include "clref/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "clref/error.hpp"
#include "clref/harness/runner.hpp"

namespace clref::harness {

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.standard_error = s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

Aggregate aggregate(const std::vector<RunRecord>& records) {
  require(!records.empty(), "aggregate: no records");
  Aggregate a;
  a.label = records.front().config.label();
  std::vector<double> acc, bwt, secs;
  for (const auto& r : records) {
    acc.push_back(r.metrics.acc);
    if (r.metrics.bwt) bwt.push_back(*r.metrics.bwt);
    secs.push_back(r.timings.total_seconds);
  }
  a.acc = summarize(acc);
  a.bwt = summarize(bwt);
  a.seconds = summarize(secs);
  return a;
}

std::vector<RunRecord> run_seeds(const RunConfig& config, unsigned jobs,
                                 const std::function<void(const RunRecord&)>& on_record) {
  config.validate();
  const std::size_t n = config.seeds.size();
  std::vector<RunRecord> records(n);
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        RunRecord record = make_record(config, run_sequence(config, config.seeds[i]));
        std::lock_guard lock(mutex);
        if (on_record) on_record(record);
        records[i] = std::move(record);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

RunConfig with_refresh(const RunConfig& config, double gamma, int steps) {
  RunConfig out = config;
  out.refresh.enabled = true;
  out.refresh.config.gamma = gamma;
  out.refresh.config.steps = steps;
  return out;
}

std::vector<SweepPoint> sweep_points(const std::vector<double>& gammas, const std::vector<int>& steps,
                                     SweepLayout layout, SweepPoint base) {
  std::vector<SweepPoint> out;
  if (layout == SweepLayout::grid) {
    for (double g : gammas)
      for (int j : steps) out.push_back({g, j});
    return out;
  }
  for (double g : gammas) out.push_back({g, base.steps});
  for (int j : steps) {
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const SweepPoint& p) { return p.gamma == base.gamma && p.steps == j; });
    if (!seen) out.push_back({base.gamma, j});
  }
  return out;
}

}  // namespace clref::harness
