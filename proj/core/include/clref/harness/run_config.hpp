#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clref/clmethods.hpp"
#include "clref/fisher.hpp"
#include "clref/harness/task_stream.hpp"
#include "clref/nn.hpp"
#include "clref/refresh.hpp"

namespace clref::harness {

/// Which Fisher the refresh preconditioner uses.
enum class FisherSource {
  accumulated,  // decay-weighted sum over consolidated tasks, as oEWC keeps
  last_task,    // only the most recently finished task
};

/// How the refresh preconditioner's Fisher values are scaled.
enum class FisherScaling {
  raw,   // as estimated
  mean,  // divided by their mean, so the average value is 1
  identity,
};

struct RefreshSettings {
  bool enabled = false;
  refresh::RefreshConfig config;
  FisherSource fisher_source = FisherSource::accumulated;
  FisherScaling fisher_scaling = FisherScaling::raw;
  std::optional<double> fisher_damping;  // replaces the estimation damping for refresh when set

  friend bool operator==(const RefreshSettings&, const RefreshSettings&) = default;
};

struct FisherSettings {
  std::size_t max_examples = fisher::kDefaultMaxExamples;
  double damping = fisher::kDefaultDamping;

  friend bool operator==(const FisherSettings&, const FisherSettings&) = default;
};

/// Everything one continual-learning run needs. Defaults are the desk-scale
/// permuted-MNIST protocol.
struct RunConfig {
  nn::NetworkSpec network{{784, 100, 10}, nn::Activation::relu};
  cl::ObjectiveConfig objective = cl::ObjectiveConfig::preset(cl::Method::finetune);
  double oewc_decay = 0.9;
  RefreshSettings refresh;
  StreamSpec stream;
  FisherSettings fisher;
  std::size_t epochs_per_task = 1;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t buffer_capacity = 500;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output_path = "results";

  void validate() const;
  /// e.g. "er+refresh"
  std::string label() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses a config document. Every key is optional; unknown keys throw
/// ContractError. Relative file paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace clref::harness
