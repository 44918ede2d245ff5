#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "clref/harness/persist.hpp"
#include "clref/harness/run_config.hpp"

namespace clref::harness {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;          // sample standard deviation; 0 when n < 2
  double standard_error = 0.0;  // stddev / sqrt(n)
};

Summary summarize(const std::vector<double>& values);

struct Aggregate {
  std::string label;
  Summary acc;
  Summary bwt;
  Summary seconds;
};

Aggregate aggregate(const std::vector<RunRecord>& records);

/// Runs every seed in `config.seeds`, up to `jobs` at a time. `on_record`
/// is called once per finished run, never concurrently. Records come back
/// in seed order. The first exception from any run is rethrown.
std::vector<RunRecord> run_seeds(const RunConfig& config, unsigned jobs = 1,
                                 const std::function<void(const RunRecord&)>& on_record = {});

/// `config` with refresh enabled at the given unlearning rate and step count.
RunConfig with_refresh(const RunConfig& config, double gamma, int steps);

struct SweepPoint {
  double gamma = 0.0;
  int steps = 1;
};

enum class SweepLayout {
  axes,  // gammas at `base.steps`, then steps at `base.gamma`; shared point once
  grid,  // Cartesian product, gamma-major
};

std::vector<SweepPoint> sweep_points(const std::vector<double>& gammas, const std::vector<int>& steps,
                                     SweepLayout layout, SweepPoint base);

}  // namespace clref::harness
