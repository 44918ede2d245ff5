#include "clref/harness/theory_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "clref/error.hpp"

namespace clref::harness {

using nlohmann::json;

void TheoryConfig::validate() const {
  network.validate();
  require(!s_values.empty(), "theory config: s_values must be nonempty");
  for (double s : s_values) require(s > 0.0, "theory config: s values must be positive");
  require(instances >= 1 && batch_size >= 1, "theory config: instances and batch_size must be >= 1");
  require(fd_step > 0.0, "theory config: fd_step must be positive");
  require(quadratic_fisher_source != theory::FisherSource::empirical,
          "theory config: quadratic instances have no empirical Fisher");
}

TheoryConfig theory_config_from_json(const json& doc) {
  require(doc.is_object(), "theory config: expected a JSON object");
  static const std::set<std::string> allowed{"network",   "seed",          "fisher_source", "s_values",
                                             "instances", "batch_size",    "fd_step",       "quadratic_dim",
                                             "quadratic_fisher_source"};
  for (const auto& [key, value] : doc.items())
    if (!allowed.count(key)) throw ContractError("theory config: unknown key '" + key + "'");

  TheoryConfig c;
  try {
    if (doc.contains("network")) {
      const json& n = doc["network"];
      for (const auto& [key, value] : n.items())
        if (key != "layer_sizes" && key != "activation")
          throw ContractError("theory config: unknown key 'network." + key + "'");
      if (n.contains("layer_sizes")) c.network.layer_sizes = n["layer_sizes"].get<std::vector<std::size_t>>();
      if (n.contains("activation")) {
        const auto a = n["activation"].get<std::string>();
        require(a == "relu" || a == "tanh", "theory config: unknown activation '" + a + "'");
        c.network.activation = a == "relu" ? nn::Activation::relu : nn::Activation::tanh;
      }
    }
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("fisher_source"))
      c.fisher_source = theory::fisher_source_from_string(doc["fisher_source"].get<std::string>());
    if (doc.contains("s_values")) c.s_values = doc["s_values"].get<std::vector<double>>();
    if (doc.contains("instances")) c.instances = doc["instances"].get<std::size_t>();
    if (doc.contains("batch_size")) c.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("fd_step")) c.fd_step = doc["fd_step"].get<double>();
    if (doc.contains("quadratic_dim")) c.quadratic_dim = doc["quadratic_dim"].get<std::size_t>();
    if (doc.contains("quadratic_fisher_source"))
      c.quadratic_fisher_source = theory::fisher_source_from_string(doc["quadratic_fisher_source"].get<std::string>());
  } catch (const json::exception& e) {
    throw ContractError(std::string("theory config: ") + e.what());
  }
  c.validate();
  return c;
}

TheoryConfig load_theory_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open theory config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("theory config " + path.string() + ": " + e.what(), e.byte);
  }
  return theory_config_from_json(doc);
}

json to_json(const theory::TheoryReport& r) {
  json instances = json::array();
  for (const auto& i : r.instances)
    instances.push_back({{"id", i.id},
                         {"cosine", i.cosine},
                         {"relative_norm_gap", i.relative_norm_gap},
                         {"correction_cosine", i.correction_cosine}});
  return json{{"instance_descriptor", r.instance_descriptor},
              {"s", r.s},
              {"sigma", r.sigma},
              {"cosine_similarity", r.cosine_similarity},
              {"min_cosine", r.min_cosine},
              {"relative_norm_gap", r.relative_norm_gap},
              {"equivalent_gamma", r.equivalent_gamma},
              {"degenerate", r.degenerate},
              {"instances", instances}};
}

}  // namespace clref::harness
