#include "clref/harness/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "clref/error.hpp"

namespace clref::harness {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  require(obj.is_object(), where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ContractError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ContractError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

std::string resolve(const std::string& path, const std::filesystem::path& base_dir) {
  if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (base_dir / path).lexically_normal().string();
}

const char* scaling_name(FisherScaling s) {
  switch (s) {
    case FisherScaling::raw: return "raw";
    case FisherScaling::mean: return "mean";
    case FisherScaling::identity: return "identity";
  }
  return "raw";
}

std::string activation_name(nn::Activation a) { return a == nn::Activation::relu ? "relu" : "tanh"; }

nn::Activation activation_from(const std::string& s) {
  if (s == "relu") return nn::Activation::relu;
  if (s == "tanh") return nn::Activation::tanh;
  throw ContractError("unknown activation '" + s + "'");
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  objective.validate();
  refresh.config.validate();
  stream.validate();
  require(oewc_decay >= 0.0 && oewc_decay <= 1.0, "RunConfig: oewc_decay must be in [0, 1]");
  require(epochs_per_task >= 1, "RunConfig: epochs_per_task must be >= 1");
  require(batch_size >= 1, "RunConfig: batch_size must be >= 1");
  require(learning_rate > 0.0, "RunConfig: learning_rate must be positive");
  require(buffer_capacity >= 1, "RunConfig: buffer_capacity must be >= 1");
  require(!seeds.empty(), "RunConfig: seeds must be nonempty");
  require(fisher.max_examples >= 1 && fisher.damping > 0.0, "RunConfig: invalid fisher settings");
  if (refresh.fisher_damping)
    require(std::isfinite(*refresh.fisher_damping) && *refresh.fisher_damping > 0.0,
            "RunConfig: refresh fisher_damping must be positive");
  if (stream.uses_files()) {
    for (const std::string* p : {&stream.train_images, &stream.train_labels, &stream.test_images, &stream.test_labels})
      require(std::filesystem::exists(*p), "RunConfig: data file not found: " + *p);
  }
}

std::string RunConfig::label() const {
  std::string s(cl::to_string(objective.method));
  if (refresh.enabled) s += "+refresh";
  return s;
}

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"network", "objective", "refresh", "stream", "fisher", "epochs_per_task", "batch_size",
                  "learning_rate", "buffer_capacity", "seeds", "output_path"},
                 "config");
  RunConfig c;

  if (doc.contains("network")) {
    const json& n = doc["network"];
    reject_unknown(n, {"layer_sizes", "activation"}, "network");
    read(n, "layer_sizes", c.network.layer_sizes);
    std::string act = activation_name(c.network.activation);
    read(n, "activation", act);
    c.network.activation = activation_from(act);
  }

  if (doc.contains("objective")) {
    const json& o = doc["objective"];
    reject_unknown(o,
                   {"method", "alpha", "beta", "replay_batch_size", "kl_argument_order", "derpp_ce_weight",
                    "oewc_decay"},
                   "objective");
    std::string method(cl::to_string(c.objective.method));
    read(o, "method", method);
    c.objective = cl::ObjectiveConfig::preset(cl::method_from_string(method));
    read(o, "alpha", c.objective.alpha);
    read(o, "beta", c.objective.beta);
    read(o, "replay_batch_size", c.objective.replay_batch_size);
    if (o.contains("kl_argument_order"))
      c.objective.kl_order = cl::kl_order_from_string(o["kl_argument_order"].get<std::string>());
    if (o.contains("derpp_ce_weight") && !o["derpp_ce_weight"].is_null())
      c.objective.derpp_ce_weight = o["derpp_ce_weight"].get<double>();
    read(o, "oewc_decay", c.oewc_decay);
  }

  if (doc.contains("refresh")) {
    const json& r = doc["refresh"];
    reject_unknown(r,
                   {"enabled", "gamma", "steps", "interval", "noise_enabled", "rng_seed", "displacement_cap",
                    "unlearn_target", "fisher_source", "noise_temperature", "fisher_scaling", "fisher_damping"},
                   "refresh");
    read(r, "enabled", c.refresh.enabled);
    read(r, "gamma", c.refresh.config.gamma);
    read(r, "steps", c.refresh.config.steps);
    read(r, "interval", c.refresh.config.interval);
    read(r, "noise_enabled", c.refresh.config.noise_enabled);
    read(r, "noise_temperature", c.refresh.config.noise_temperature);
    if (r.contains("fisher_scaling")) {
      const auto s = r["fisher_scaling"].get<std::string>();
      if (s == "raw") c.refresh.fisher_scaling = FisherScaling::raw;
      else if (s == "mean") c.refresh.fisher_scaling = FisherScaling::mean;
      else if (s == "identity") c.refresh.fisher_scaling = FisherScaling::identity;
      else throw ContractError("unknown fisher_scaling '" + s + "'");
    }
    if (r.contains("fisher_damping") && !r["fisher_damping"].is_null())
      c.refresh.fisher_damping = r["fisher_damping"].get<double>();
    read(r, "rng_seed", c.refresh.config.rng_seed);
    read(r, "displacement_cap", c.refresh.config.displacement_cap);
    if (r.contains("unlearn_target"))
      c.refresh.config.target = refresh::unlearn_target_from_string(r["unlearn_target"].get<std::string>());
    if (r.contains("fisher_source")) {
      const auto s = r["fisher_source"].get<std::string>();
      if (s == "accumulated") c.refresh.fisher_source = FisherSource::accumulated;
      else if (s == "last_task") c.refresh.fisher_source = FisherSource::last_task;
      else throw ContractError("unknown fisher_source '" + s + "'");
    }
  }

  if (doc.contains("stream")) {
    const json& s = doc["stream"];
    reject_unknown(s,
                   {"generator", "scenario", "num_tasks", "seed", "train_images", "train_labels", "test_images",
                    "test_labels", "train_per_task", "test_per_task", "angles_deg", "input_dim",
                    "classes_per_task", "train_per_class", "test_per_class", "mean_radius", "covariance_scale",
                    "shared_means", "label_shift_per_task"},
                   "stream");
    StreamSpec& st = c.stream;
    if (s.contains("generator")) st.generator = generator_from_string(s["generator"].get<std::string>());
    if (s.contains("scenario")) st.scenario = scenario_from_string(s["scenario"].get<std::string>());
    read(s, "num_tasks", st.num_tasks);
    read(s, "seed", st.seed);
    read(s, "train_images", st.train_images);
    read(s, "train_labels", st.train_labels);
    read(s, "test_images", st.test_images);
    read(s, "test_labels", st.test_labels);
    read(s, "train_per_task", st.train_per_task);
    read(s, "test_per_task", st.test_per_task);
    read(s, "angles_deg", st.angles_deg);
    read(s, "input_dim", st.input_dim);
    read(s, "classes_per_task", st.classes_per_task);
    read(s, "train_per_class", st.train_per_class);
    read(s, "test_per_class", st.test_per_class);
    read(s, "mean_radius", st.mean_radius);
    read(s, "covariance_scale", st.covariance_scale);
    read(s, "shared_means", st.shared_means);
    read(s, "label_shift_per_task", st.label_shift_per_task);
    for (std::string* p : {&st.train_images, &st.train_labels, &st.test_images, &st.test_labels})
      *p = resolve(*p, base_dir);
  }

  if (doc.contains("fisher")) {
    const json& f = doc["fisher"];
    reject_unknown(f, {"max_examples", "damping"}, "fisher");
    read(f, "max_examples", c.fisher.max_examples);
    read(f, "damping", c.fisher.damping);
  }

  read(doc, "epochs_per_task", c.epochs_per_task);
  read(doc, "batch_size", c.batch_size);
  read(doc, "learning_rate", c.learning_rate);
  read(doc, "buffer_capacity", c.buffer_capacity);
  read(doc, "seeds", c.seeds);
  read(doc, "output_path", c.output_path);
  c.output_path = resolve(c.output_path, base_dir);
  return c;
}

json to_json(const RunConfig& c) {
  json doc;
  doc["network"] = {{"layer_sizes", c.network.layer_sizes}, {"activation", activation_name(c.network.activation)}};
  doc["objective"] = {{"method", std::string(cl::to_string(c.objective.method))},
                      {"alpha", c.objective.alpha},
                      {"beta", c.objective.beta},
                      {"replay_batch_size", c.objective.replay_batch_size},
                      {"kl_argument_order", std::string(cl::to_string(c.objective.kl_order))},
                      {"derpp_ce_weight", c.objective.derpp_ce_weight ? json(*c.objective.derpp_ce_weight) : json()},
                      {"oewc_decay", c.oewc_decay}};
  const auto& r = c.refresh.config;
  doc["refresh"] = {{"enabled", c.refresh.enabled},
                    {"gamma", r.gamma},
                    {"steps", r.steps},
                    {"interval", r.interval},
                    {"noise_enabled", r.noise_enabled},
                    {"noise_temperature", r.noise_temperature},
                    {"fisher_scaling", scaling_name(c.refresh.fisher_scaling)},
                    {"fisher_damping", c.refresh.fisher_damping ? json(*c.refresh.fisher_damping) : json()},
                    {"rng_seed", r.rng_seed},
                    {"displacement_cap", r.displacement_cap},
                    {"unlearn_target", std::string(refresh::to_string(r.target))},
                    {"fisher_source", c.refresh.fisher_source == FisherSource::accumulated ? "accumulated" : "last_task"}};
  const StreamSpec& s = c.stream;
  doc["stream"] = {{"generator", std::string(to_string(s.generator))},
                   {"scenario", std::string(to_string(s.scenario))},
                   {"num_tasks", s.num_tasks},
                   {"seed", s.seed},
                   {"train_images", s.train_images},
                   {"train_labels", s.train_labels},
                   {"test_images", s.test_images},
                   {"test_labels", s.test_labels},
                   {"train_per_task", s.train_per_task},
                   {"test_per_task", s.test_per_task},
                   {"angles_deg", s.angles_deg},
                   {"input_dim", s.input_dim},
                   {"classes_per_task", s.classes_per_task},
                   {"train_per_class", s.train_per_class},
                   {"test_per_class", s.test_per_class},
                   {"mean_radius", s.mean_radius},
                   {"covariance_scale", s.covariance_scale},
                   {"shared_means", s.shared_means},
                   {"label_shift_per_task", s.label_shift_per_task}};
  doc["fisher"] = {{"max_examples", c.fisher.max_examples}, {"damping", c.fisher.damping}};
  doc["epochs_per_task"] = c.epochs_per_task;
  doc["batch_size"] = c.batch_size;
  doc["learning_rate"] = c.learning_rate;
  doc["buffer_capacity"] = c.buffer_capacity;
  doc["seeds"] = c.seeds;
  doc["output_path"] = c.output_path;
  return doc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ContractError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

}  // namespace clref::harness
