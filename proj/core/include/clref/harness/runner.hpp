#pragma once

#include <cstdint>
#include <vector>

#include "clref/harness/metrics.hpp"
#include "clref/harness/run_config.hpp"
#include "clref/harness/task_stream.hpp"
#include "clref/linalg.hpp"

namespace clref::harness {

struct Timings {
  double train_seconds = 0.0;
  double fisher_seconds = 0.0;
  double eval_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<double> task_train_seconds;

  friend bool operator==(const Timings&, const Timings&) = default;
};

struct RunDiagnostics {
  std::uint64_t plain_steps = 0;
  std::uint64_t refresh_steps = 0;
  std::uint64_t capped_unlearn_steps = 0;
  double final_loss = 0.0;

  friend bool operator==(const RunDiagnostics&, const RunDiagnostics&) = default;
};

struct RunResult {
  std::uint64_t seed = 0;
  AccuracyMatrix accuracy;
  Timings timings;
  RunDiagnostics diagnostics;
  ParamVector final_params;
};

/// Accuracy on `batch`; under task-IL only the `classes` logits compete.
double masked_accuracy(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                       const std::vector<int>& classes);

/// Trains the tasks of `stream` in order with one seed. After each task it
/// consolidates the Fisher (when oEWC or refresh needs it) and fills one
/// accuracy row. Throws NumericError carrying the 1-based iteration index
/// if a step produces a non-finite loss.
RunResult run_sequence(const RunConfig& config, const TaskStream& stream, std::uint64_t seed);

/// Builds the stream for `seed` (permutations/means depend on
/// stream.seed and the run seed), then runs it.
RunResult run_sequence(const RunConfig& config, std::uint64_t seed);

/// The stream spec actually used for a given run seed.
StreamSpec stream_for_seed(const StreamSpec& spec, std::uint64_t seed);

}  // namespace clref::harness
