// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Desk-scale runs read configs/ and data/ from the source
// tree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "clref/bregman.hpp"
#include "clref/clmethods.hpp"
#include "clref/fisher.hpp"
#include "clref/harness/experiment.hpp"
#include "clref/harness/runner.hpp"
#include "clref/nn.hpp"
#include "clref/refresh.hpp"
#include "clref/theory.hpp"

namespace fs = std::filesystem;
using namespace clref;
using namespace clref::harness;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

RunConfig desk_config(const std::string& method) {
  return load_run_config(fs::path(CLREF_SOURCE_DIR) / "configs" / ("desk_pmnist_" + method + ".json"));
}

RunConfig refreshed(RunConfig c) {
  c.refresh.enabled = true;
  return c;
}

// Desk runs shared by the accuracy, forgetting and overhead criteria.
std::map<std::string, std::vector<RunRecord>>& desk_records() {
  static std::map<std::string, std::vector<RunRecord>> records;
  return records;
}

const std::vector<RunRecord>& desk_runs(const std::string& method, bool refresh) {
  const std::string key = method + (refresh ? "+refresh" : "");
  auto& all = desk_records();
  if (!all.contains(key)) {
    const RunConfig base = desk_config(method);
    all[key] = run_seeds(refresh ? refreshed(base) : base, jobs());
  }
  return all[key];
}

double mean_seconds(const std::vector<RunRecord>& rs) {
  double s = 0.0;
  for (const auto& r : rs) s += r.timings.total_seconds;
  return s / static_cast<double>(rs.size());
}

Outcome gradients_match_finite_differences() {
  double worst = 0.0;
  std::string worst_method;
  std::size_t count = 0;
  for (cl::Method m : {cl::Method::finetune, cl::Method::er, cl::Method::derpp, cl::Method::oewc, cl::Method::cpr,
                       cl::Method::joint}) {
    const auto r = theory::check_preset_gradient(m, 2024, 50);
    count += r.instances;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_method = cl::to_string(m);
    }
  }
  return {worst < 1e-4, format("%zu instances over 6 presets, max relative error %.2e (%s), bound 1e-4", count, worst,
                               worst_method.c_str())};
}

std::vector<double> random_logits(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> z(n);
  for (double& v : z) v = normal(rng);
  return z;
}

std::vector<double> softmax_of(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
  for (double& v : p) v /= s;
  return p;
}

Outcome bregman_identities_hold() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim(2, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double kl = 0.0, quad = 0.0, euclid = 0.0, ce = 0.0, cpr = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = dim(rng);
    const auto p = softmax_of(random_logits(n, rng));
    const auto q = softmax_of(random_logits(n, rng));
    kl = std::max(kl, std::abs(bregman::divergence(bregman::Potential::neg_entropy(), p, q) -
                               bregman::kl_discrete(p, q)));

    std::vector<double> f(n), a(n), b(n);
    double half_weighted = 0.0, squared = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = u(rng) * 3.0;
      a[i] = normal(rng);
      b[i] = normal(rng);
      half_weighted += 0.5 * f[i] * (a[i] - b[i]) * (a[i] - b[i]);
      squared += (a[i] - b[i]) * (a[i] - b[i]);
    }
    quad = std::max(quad, std::abs(bregman::divergence(bregman::Potential::fisher_quadratic(f), a, b) - half_weighted));
    euclid = std::max(euclid, std::abs(bregman::divergence(bregman::Potential::squared_norm(), a, b) - squared));

    // Replay cross-entropy is the neg-entropy divergence from the one-hot label.
    const auto z = random_logits(n, rng);
    const int label = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> onehot(n, 0.0);
    onehot[static_cast<std::size_t>(label)] = 1.0;
    const double xent = nn::softmax_cross_entropy(Matrix(1, n, z), std::vector<int>{label}, nullptr);
    ce = std::max(ce, std::abs(bregman::divergence(bregman::Potential::neg_entropy(), onehot, softmax_of(z)) - xent));

    // KL to the uniform distribution plus entropy is log C.
    const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    cpr = std::max(cpr, std::abs(bregman::kl_discrete(p, uniform) + bregman::entropy(p) -
                                 std::log(static_cast<double>(n))));
  }
  const double worst = std::max({kl, quad, euclid, ce, cpr});
  return {worst <= 1e-10, format("100 instances, max deviation: KL %.1e, F-quadratic %.1e, Euclidean %.1e, "
                                 "replay CE %.1e, KL+H=lnC %.1e",
                                 kl, quad, euclid, ce, cpr)};
}

Outcome inactive_refresh_is_the_base_method() {
  std::size_t compared = 0;
  for (const std::string method : {"finetune", "er", "derpp", "oewc"}) {
    RunConfig base = desk_config(method);
    base.stream.num_tasks = 2;
    base.stream.train_per_task = 800;
    base.stream.test_per_task = 200;
    const RunResult plain = run_sequence(base, 0);

    RunConfig zero_steps = refreshed(base);
    zero_steps.refresh.config.steps = 0;
    RunConfig never_due = refreshed(base);
    never_due.refresh.config.interval = 1'000'000'000;
    for (const RunConfig* c : {&zero_steps, &never_due}) {
      const RunResult r = run_sequence(*c, 0);
      ++compared;
      if (r.final_params != plain.final_params || !(r.accuracy == plain.accuracy))
        return {false, format("%s: parameters differ from the base method", method.c_str())};
    }
  }
  return {true, format("%zu runs (J=0 and interval 1e9, four methods) bit-identical to the base method", compared)};
}

Outcome noise_variance_is_calibrated() {
  const std::vector<double> values{0.0, 0.5, 1.0, 4.0, 100.0};
  const fisher::DiagFisher f{values, fisher::kDefaultDamping};
  refresh::RefreshConfig config;
  config.gamma = 0.03;
  config.noise_enabled = true;
  const ParamVector zero(values.size());
  const refresh::GradFn no_gradient = [&](const ParamVector&) { return ParamVector(values.size()); };
  std::mt19937_64 rng(12345);
  constexpr int kDraws = 1'000'000;
  std::vector<double> sum(values.size()), sum_sq(values.size());
  for (int d = 0; d < kDraws; ++d) {
    const ParamVector x = refresh::unlearn_step(zero, no_gradient, f, config, rng).params;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i] += x[i];
      sum_sq[i] += x[i] * x[i];
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double m = sum[i] / kDraws;
    const double var = (sum_sq[i] - kDraws * m * m) / (kDraws - 1);
    const double expected = 2.0 * config.gamma / (values[i] + f.damping);
    worst = std::max(worst, std::abs(var / expected - 1.0));
  }
  return {worst < 0.01, format("10^6 draws, F in {0, 0.5, 1, 4, 100}: max relative variance error %.3f%%, bound 1%%",
                               100.0 * worst)};
}

Outcome theorem_directions_agree() {
  const nn::NetworkSpec spec{{8, 6, 3}, nn::Activation::tanh};
  theory::TheoryOptions opts;
  opts.instances = 20;
  const auto mlp = theory::verify_theorem(spec, 0, theory::FisherSource::empirical, 1e-3, 1e-3, opts);
  const auto quad = theory::verify_theorem_quadratic(12, 0, theory::FisherSource::isotropic, 1e-3, 1e-3, opts);
  const double quad_dev = std::max(std::abs(quad.cosine_similarity - 1.0), std::abs(quad.min_cosine - 1.0));
  const bool pass = mlp.instances.size() >= 20 && mlp.cosine_similarity >= 0.95 && quad.instances.size() >= 20 &&
                    quad_dev <= 1e-6;
  return {pass, format("MLP: %zu instances, mean cosine %.4f (min %.4f), bound 0.95; quadratic: %zu instances, "
                       "max |cos - 1| %.1e, bound 1e-6",
                       mlp.instances.size(), mlp.cosine_similarity, mlp.min_cosine, quad.instances.size(), quad_dev)};
}

Outcome refresh_improves_desk_accuracy() {
  std::string detail;
  bool pass = true;
  double er_gain = 0.0;
  for (const std::string method : {"er", "oewc", "derpp"}) {
    const Aggregate a = aggregate(desk_runs(method, false));
    const Aggregate b = aggregate(desk_runs(method, true));
    const double gain = 100.0 * (b.acc.mean - a.acc.mean);
    if (method == "er") er_gain = gain;
    pass = pass && b.acc.n >= 5 && b.acc.mean >= a.acc.mean;
    detail += format("%s %.2f -> %.2f (%+.2f), ", method.c_str(), 100.0 * a.acc.mean, 100.0 * b.acc.mean, gain);
  }
  pass = pass && er_gain >= 0.3;
  return {pass, detail + format("%zu seeds; ER gain bound +0.30 points", desk_runs("er", false).size())};
}

Outcome finetune_forgets_and_replay_helps() {
  const auto& ft = desk_runs("finetune", false);
  bool every_seed_forgets = true;
  for (const auto& r : ft) every_seed_forgets = every_seed_forgets && r.metrics.bwt && *r.metrics.bwt < 0.0;
  const Aggregate a = aggregate(ft);
  const Aggregate b = aggregate(desk_runs("er", false));
  return {every_seed_forgets && b.bwt.mean > a.bwt.mean,
          format("finetune BWT %+.4f (negative on %s seeds), ER BWT %+.4f", a.bwt.mean,
                 every_seed_forgets ? "all" : "not all", b.bwt.mean)};
}

Outcome sweep_trend_holds() {
  const RunConfig base = desk_config("er");
  const SweepPoint centre{base.refresh.config.gamma, base.refresh.config.steps};
  std::map<int, Summary> by_steps;
  std::string detail;
  for (const SweepPoint& p : sweep_points({0.02, 0.03, 0.04}, {1, 2, 3}, SweepLayout::axes, centre)) {
    std::vector<RunRecord> runs;
    try {
      runs = run_seeds(with_refresh(base, p.gamma, p.steps), jobs());
    } catch (const std::exception& e) {
      return {false, format("gamma=%g J=%d diverged: %s", p.gamma, p.steps, e.what())};
    }
    const Aggregate a = aggregate(runs);
    if (!std::isfinite(a.acc.mean)) return {false, format("gamma=%g J=%d: non-finite accuracy", p.gamma, p.steps)};
    if (p.gamma == centre.gamma) by_steps[p.steps] = a.acc;
    detail += format("g=%g J=%d %.2f, ", p.gamma, p.steps, 100.0 * a.acc.mean);
  }
  const Summary& j1 = by_steps.at(1);
  const Summary& j3 = by_steps.at(3);
  const double se = std::max(j1.standard_error, j3.standard_error);
  return {j3.mean <= j1.mean + se, detail + format("J=3 minus J=1 %+.2f points, one SE %.2f", 100.0 * (j3.mean - j1.mean),
                                                   100.0 * se)};
}

Outcome refresh_overhead_is_bounded() {
  std::string detail;
  bool pass = true;
  for (const std::string method : {"er", "oewc", "derpp"}) {
    const double ratio = mean_seconds(desk_runs(method, true)) / mean_seconds(desk_runs(method, false));
    pass = pass && ratio <= 2.2;
    detail += format("%s %.2fx, ", method.c_str(), ratio);
  }
  const auto& rc = desk_config("er").refresh.config;
  return {pass, detail + format("interval=%d J=%d, bound 2.2x", rc.interval, rc.steps)};
}

Outcome natural_gradient_solves_diagonal_quadratic() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(k % 16);
    std::vector<double> h(n);
    ParamVector theta(n), minimizer(n), grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = u(rng);
      theta[i] = normal(rng);
      minimizer[i] = normal(rng);
      grad[i] = h[i] * (theta[i] - minimizer[i]);
    }
    const ParamVector next = cl::natural_gradient_step(theta, grad, fisher::DiagFisher{h, 0.0}, 1.0, 0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(next[i] - minimizer[i]));
  }
  return {worst <= 1e-10, format("100 diagonal quadratics, max distance to the minimizer %.1e, bound 1e-10", worst)};
}

struct Criterion {
  const char* name;
  double time_limit_seconds;  // 0 when the criterion has no own limit
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"gradients match finite differences", 60, gradients_match_finite_differences},
      {"Bregman identities", 0, bregman_identities_hold},
      {"inactive refresh reproduces the base method", 60, inactive_refresh_is_the_base_method},
      {"unlearning noise variance", 60, noise_variance_is_calibrated},
      {"refresh gradient matches the weighted-norm penalty", 300, theorem_directions_agree},
      {"refresh improves desk P-MNIST accuracy", 900, refresh_improves_desk_accuracy},
      {"finetune forgets, replay forgets less", 0, finetune_forgets_and_replay_helps},
      {"unlearning sweep trend", 1800, sweep_trend_holds},
      {"refresh wall-clock overhead", 0, refresh_overhead_is_bounded},
      {"natural gradient step solves a diagonal quadratic", 0, natural_gradient_solves_diagonal_quadratic},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const Criterion& c = criteria[k];
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (c.time_limit_seconds > 0 && seconds > c.time_limit_seconds) {
      o.pass = false;
      o.detail += format(" [over the %.0f s limit]", c.time_limit_seconds);
    }
    if (!o.pass) ++failures;
    std::printf("%s  %2zu  %-52s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", k + 1, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
