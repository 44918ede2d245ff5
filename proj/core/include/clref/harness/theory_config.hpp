#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "clref/nn.hpp"
#include "clref/theory.hpp"

namespace clref::harness {

/// Settings for `clref theory`.
struct TheoryConfig {
  nn::NetworkSpec network{{8, 6, 3}, nn::Activation::tanh};
  std::uint64_t seed = 0;
  theory::FisherSource fisher_source = theory::FisherSource::empirical;
  std::vector<double> s_values{1e-2, 1e-3, 1e-4};
  std::size_t instances = 20;
  std::size_t batch_size = 8;
  double fd_step = 1e-5;
  std::size_t quadratic_dim = 12;  // 0 skips the quadratic instances
  theory::FisherSource quadratic_fisher_source = theory::FisherSource::isotropic;

  void validate() const;
};

/// Unknown keys throw ContractError.
TheoryConfig theory_config_from_json(const nlohmann::json& doc);
TheoryConfig load_theory_config(const std::filesystem::path& path);

nlohmann::json to_json(const theory::TheoryReport& report);

}  // namespace clref::harness
