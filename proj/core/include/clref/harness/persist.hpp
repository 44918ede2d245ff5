#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "clref/harness/metrics.hpp"
#include "clref/harness/run_config.hpp"
#include "clref/harness/runner.hpp"

namespace clref::harness {

/// What a run writes to disk, and what reading it back yields.
struct RunRecord {
  RunConfig config;
  std::uint64_t seed = 0;
  AccuracyMatrix accuracy;
  Metrics metrics;
  Timings timings;
  RunDiagnostics diagnostics;
  std::string git_describe;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

RunRecord make_record(const RunConfig& config, const RunResult& result);

inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kSummaryHeader = "method,refresh,gamma,J,interval,buffer,seed,acc,bwt,seconds";

/// Writes <dir>/run_<label>[_g<gamma>_J<steps>_i<interval>]_seed<seed>.json and appends one row to
/// <dir>/summary.csv (header written when the file is new). Returns the
/// JSON path. Not thread-safe: concurrent callers must serialize.
std::filesystem::path persist_results(const std::filesystem::path& dir, const RunRecord& record);

RunRecord load_run_record(const std::filesystem::path& path);

nlohmann::json to_json(const RunRecord& record);

/// The build's `git describe` string, or "unknown".
std::string git_describe();

}  // namespace clref::harness
