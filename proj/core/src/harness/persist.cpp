#include "clref/harness/persist.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "clref/error.hpp"

#ifndef CLREF_GIT_DESCRIBE
#define CLREF_GIT_DESCRIBE "unknown"
#endif

namespace clref::harness {

using nlohmann::json;

std::string git_describe() { return CLREF_GIT_DESCRIBE; }

RunRecord make_record(const RunConfig& config, const RunResult& result) {
  return RunRecord{config,           result.seed,        result.accuracy, compute_metrics(result.accuracy),
                   result.timings,   result.diagnostics, git_describe()};
}

json to_json(const RunRecord& r) {
  json matrix = json::array();
  for (const auto& row : r.accuracy.rows()) matrix.push_back(row);
  return json{{"config", to_json(r.config)},
              {"seed", r.seed},
              {"accuracy_matrix", matrix},
              {"acc", r.metrics.acc},
              {"bwt", r.metrics.bwt ? json(*r.metrics.bwt) : json()},
              {"timings",
               {{"train_seconds", r.timings.train_seconds},
                {"fisher_seconds", r.timings.fisher_seconds},
                {"eval_seconds", r.timings.eval_seconds},
                {"total_seconds", r.timings.total_seconds},
                {"task_train_seconds", r.timings.task_train_seconds}}},
              {"diagnostics",
               {{"plain_steps", r.diagnostics.plain_steps},
                {"refresh_steps", r.diagnostics.refresh_steps},
                {"capped_unlearn_steps", r.diagnostics.capped_unlearn_steps},
                {"final_loss", r.diagnostics.final_loss}}},
              {"git_describe", r.git_describe}};
}

std::filesystem::path persist_results(const std::filesystem::path& dir, const RunRecord& record) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("persist_results: cannot create " + dir.string() + ": " + ec.message());

  std::string stem = "run_" + record.config.label();
  if (record.config.refresh.enabled) {
    std::ostringstream tag;
    tag << "_g" << record.config.refresh.config.gamma << "_J" << record.config.refresh.config.steps << "_i"
        << record.config.refresh.config.interval;
    stem += tag.str();
  }
  const auto json_path = dir / (stem + "_seed" + std::to_string(record.seed) + ".json");
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("persist_results: cannot write " + json_path.string());
    out << std::setprecision(17) << to_json(record).dump(2) << '\n';
  }

  const auto csv_path = dir / kSummaryFile;
  const bool fresh = !std::filesystem::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::app);
  if (!csv) throw std::runtime_error("persist_results: cannot append to " + csv_path.string());
  if (fresh) csv << kSummaryHeader << '\n';
  const auto& rc = record.config.refresh;
  std::ostringstream row;
  row << std::setprecision(10) << cl::to_string(record.config.objective.method) << ','
      << (rc.enabled ? "on" : "off") << ',' << rc.config.gamma << ',' << rc.config.steps << ','
      << rc.config.interval << ',' << record.config.buffer_capacity << ',' << record.seed << ','
      << record.metrics.acc << ',';
  if (record.metrics.bwt) row << *record.metrics.bwt;
  row << ',' << record.timings.total_seconds;
  csv << row.str() << '\n';
  return json_path;
}

RunRecord load_run_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open run record " + path.string());
  const json doc = json::parse(in);
  RunRecord r;
  r.config = run_config_from_json(doc.at("config"));
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.accuracy = AccuracyMatrix::from_rows(doc.at("accuracy_matrix").get<std::vector<std::vector<double>>>());
  r.metrics.acc = doc.at("acc").get<double>();
  if (!doc.at("bwt").is_null()) r.metrics.bwt = doc.at("bwt").get<double>();
  const json& t = doc.at("timings");
  r.timings.train_seconds = t.at("train_seconds").get<double>();
  r.timings.fisher_seconds = t.at("fisher_seconds").get<double>();
  r.timings.eval_seconds = t.at("eval_seconds").get<double>();
  r.timings.total_seconds = t.at("total_seconds").get<double>();
  r.timings.task_train_seconds = t.at("task_train_seconds").get<std::vector<double>>();
  const json& d = doc.at("diagnostics");
  r.diagnostics.plain_steps = d.at("plain_steps").get<std::uint64_t>();
  r.diagnostics.refresh_steps = d.at("refresh_steps").get<std::uint64_t>();
  r.diagnostics.capped_unlearn_steps = d.at("capped_unlearn_steps").get<std::uint64_t>();
  r.diagnostics.final_loss = d.at("final_loss").get<double>();
  r.git_describe = doc.at("git_describe").get<std::string>();
  return r;
}

}  // namespace clref::harness
