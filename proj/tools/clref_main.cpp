// clref: command-line driver for runs, sweeps and numerical checks.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clref/error.hpp"
#include "clref/harness/experiment.hpp"
#include "clref/harness/persist.hpp"
#include "clref/harness/run_config.hpp"
#include "clref/harness/theory_config.hpp"
#include "clref/theory.hpp"

namespace fs = std::filesystem;
using namespace clref;
using namespace clref::harness;

namespace {

void print_aggregate(const Aggregate& a, const char* extra = "") {
  std::printf("%-16s %s runs=%zu  ACC %.4f +- %.4f (se %.4f)", a.label.c_str(), extra, a.acc.n, a.acc.mean,
              a.acc.stddev, a.acc.standard_error);
  if (a.bwt.n > 0) std::printf("  BWT %+.4f +- %.4f", a.bwt.mean, a.bwt.stddev);
  std::printf("  %.2fs/run\n", a.seconds.mean);
}

std::vector<RunRecord> run_and_persist(const RunConfig& config, unsigned jobs, const fs::path& out, bool quiet) {
  return run_seeds(config, jobs, [&](const RunRecord& r) {
    const fs::path path = persist_results(out, r);
    if (!quiet) {
      std::printf("  seed %llu: ACC %.4f", static_cast<unsigned long long>(r.seed), r.metrics.acc);
      if (r.metrics.bwt) std::printf("  BWT %+.4f", *r.metrics.bwt);
      std::printf("  %.2fs  -> %s\n", r.timings.total_seconds, path.string().c_str());
    }
    std::fflush(stdout);
  });
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::string& out,
            unsigned jobs) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.seeds = {*seed};
  const fs::path dir = out.empty() ? fs::path(config.output_path) : fs::path(out);
  std::printf("%s: %zu seed(s)\n", config.label().c_str(), config.seeds.size());
  const auto records = run_and_persist(config, jobs, dir, false);
  print_aggregate(aggregate(records));
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& gammas, const std::vector<int>& steps,
              const std::string& out, unsigned jobs, bool baseline, bool grid) {
  const RunConfig base = load_run_config(config_path);
  const fs::path dir = out.empty() ? fs::path(base.output_path) : fs::path(out);
  if (baseline) {
    RunConfig plain = base;
    plain.refresh.enabled = false;
    print_aggregate(aggregate(run_and_persist(plain, jobs, dir, true)), "baseline      ");
  }
  const SweepPoint centre{base.refresh.config.gamma, base.refresh.config.steps};
  for (const SweepPoint& p : sweep_points(gammas, steps, grid ? SweepLayout::grid : SweepLayout::axes, centre)) {
    const RunConfig config = with_refresh(base, p.gamma, p.steps);
    char tag[64];
    std::snprintf(tag, sizeof tag, "gamma=%-6g J=%d", p.gamma, p.steps);
    print_aggregate(aggregate(run_and_persist(config, jobs, dir, true)), tag);
    std::fflush(stdout);
  }
  return 0;
}

int cmd_gradcheck(std::size_t instances, std::uint64_t seed, double tolerance) {
  bool ok = true;
  for (cl::Method m : {cl::Method::finetune, cl::Method::er, cl::Method::derpp, cl::Method::oewc, cl::Method::cpr,
                       cl::Method::joint}) {
    const auto r = theory::check_preset_gradient(m, seed, instances);
    const bool pass = r.max_relative_error < tolerance;
    ok = ok && pass;
    std::printf("%-9s instances=%zu  max rel. error %.3e (instance %zu)  %s\n", std::string(cl::to_string(m)).c_str(),
                r.instances, r.max_relative_error, r.worst_instance, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

void print_theory(const theory::TheoryReport& r) {
  std::printf("%s  s=%g sigma=%g  mean cos %.8f  min cos %.8f  mean gap %.3e  degenerate %zu\n",
              r.instance_descriptor.c_str(), r.s, r.sigma, r.cosine_similarity, r.min_cosine, r.relative_norm_gap,
              r.degenerate);
  std::printf("  %4s %10s %14s %12s %14s\n", "id", "s", "cosine", "gap", "corr. cosine");
  for (const auto& i : r.instances)
    std::printf("  %4zu %10.1e %14.10f %12.4e %14.6f\n", i.id, r.s, i.cosine, i.relative_norm_gap,
                i.correction_cosine);
  std::printf("  (unnormalized unlearning rate equivalent: gamma = s/||grad L|| ~ %.3e)\n", r.equivalent_gamma);
}

int cmd_theory(const std::string& config_path, const std::string& json_out) {
  const TheoryConfig tc = config_path.empty() ? TheoryConfig{} : load_theory_config(config_path);
  theory::TheoryOptions opts;
  opts.instances = tc.instances;
  opts.batch_size = tc.batch_size;
  opts.fd_step = tc.fd_step;

  nlohmann::json reports = nlohmann::json::array();
  for (double s : tc.s_values) {
    const auto r = theory::verify_theorem(tc.network, tc.seed, tc.fisher_source, s, s, opts);
    print_theory(r);
    reports.push_back(to_json(r));
  }
  if (tc.quadratic_dim > 0) {
    for (double s : tc.s_values) {
      const auto r = theory::verify_theorem_quadratic(tc.quadratic_dim, tc.seed, tc.quadratic_fisher_source, s, s, opts);
      print_theory(r);
      reports.push_back(to_json(r));
    }
  }
  const std::string doc = reports.dump(2);
  if (json_out.empty() || json_out == "-") {
    std::printf("%s\n", doc.c_str());
  } else {
    std::ofstream(json_out) << doc << '\n';
    std::printf("JSON report written to %s\n", json_out.c_str());
  }
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out, unsigned jobs) {
  const RunConfig config = load_run_config(config_path);
  RunConfig plain = config;
  plain.refresh.enabled = false;
  RunConfig refreshed = config;
  refreshed.refresh.enabled = true;
  const fs::path dir = out.empty() ? fs::path(config.output_path) : fs::path(out);

  const auto a = aggregate(run_and_persist(plain, jobs, dir, true));
  const auto b = aggregate(run_and_persist(refreshed, jobs, dir, true));
  print_aggregate(a);
  print_aggregate(b);
  const auto& rc = refreshed.refresh.config;
  std::printf("wall-clock ratio (refresh / baseline, interval=%d, J=%d): %.3f\n", rc.interval, rc.steps,
              b.seconds.mean / a.seconds.mean);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clref: continual learning with refresh (unlearn-relearn) steps"};
  app.require_subcommand(1);

  std::string config_path, out, json_out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::vector<double> gammas{0.02, 0.03, 0.04};
  std::vector<int> steps{1, 2, 3};
  bool baseline = false;
  bool grid = false;
  std::size_t instances = 50;
  std::uint64_t check_seed = 0;
  double tolerance = 1e-4;

  auto* run = app.add_subcommand("run", "Train every seed of a config and record the results");
  run->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out, "Output directory (default: the config's output_path)");
  run->add_option("--jobs", jobs, "Seeds to run concurrently")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Vary the unlearning rate and step count");
  sweep->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--gamma", gammas, "Unlearning rates")->delimiter(',');
  sweep->add_option("--steps", steps, "Unlearning step counts")->delimiter(',');
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--jobs", jobs, "Seeds to run concurrently")->check(CLI::PositiveNumber);
  sweep->add_flag("--baseline", baseline, "Also run the config without refresh");
  sweep->add_flag("--grid", grid,
                  "Full gamma x steps product (default: vary gamma at the config's steps, then steps at its gamma)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every preset's gradient");
  grad->add_option("--instances", instances, "Instances per preset");
  grad->add_option("--seed", check_seed, "Seed");
  grad->add_option("--tolerance", tolerance, "Maximum relative error");

  auto* theory_cmd = app.add_subcommand("theory", "Compare refresh gradients with the weighted-norm penalty gradient");
  theory_cmd->add_option("--config", config_path, "JSON theory config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  theory_cmd->add_option("--json", json_out, "Where to write the JSON report ('-' for stdout)");

  auto* bench = app.add_subcommand("bench", "Wall-clock of a config with and without refresh");
  bench->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Output directory");
  bench->add_option("--jobs", jobs, "Seeds to run concurrently")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out, jobs);
    if (*sweep) return cmd_sweep(config_path, gammas, steps, out, jobs, baseline, grid);
    if (*grad) return cmd_gradcheck(instances, check_seed, tolerance);
    if (*theory_cmd) return cmd_theory(config_path, json_out);
    if (*bench) return cmd_bench(config_path, out, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "clref: %s\n", e.what());
    return 2;
  }
  return 0;
}
