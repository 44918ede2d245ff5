// Micro-benchmarks for the per-iteration costs of a desk-scale run.

#include <random>

#include <benchmark/benchmark.h>

#include "clref/clmethods.hpp"
#include "clref/fisher.hpp"
#include "clref/nn.hpp"
#include "clref/refresh.hpp"

using namespace clref;

namespace {

const nn::NetworkSpec kDesk{{784, 100, 10}, nn::Activation::relu};

nn::Batch random_batch(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  nn::Batch b{Matrix(n, kDesk.input_dim()), std::vector<int>(n)};
  for (double& v : b.inputs.data) v = u(rng);
  for (std::size_t i = 0; i < n; ++i) b.labels[i] = static_cast<int>(i % kDesk.num_classes());
  return b;
}

cl::ReplayDraw random_replay(std::size_t n, std::uint64_t seed) {
  const nn::Batch b = random_batch(n, seed);
  cl::ReplayDraw d;
  d.primary = cl::ReplaySample{b, Matrix(n, kDesk.num_classes())};
  return d;
}

void LossAndGrad(benchmark::State& state) {
  const ParamVector p = nn::init_params(kDesk, 0);
  const nn::Batch b = random_batch(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(nn::loss_and_grad(kDesk, p, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(LossAndGrad)->Arg(32)->Arg(64);

void PlainStepEr(benchmark::State& state) {
  const ParamVector p = nn::init_params(kDesk, 0);
  const nn::Batch b = random_batch(32, 1);
  const cl::ReplayDraw replay = random_replay(32, 2);
  const auto objective = cl::ObjectiveConfig::preset(cl::Method::er, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(refresh::plain_train_step(kDesk, p, b, replay, objective, 0.05));
}
BENCHMARK(PlainStepEr);

void RefreshStepEr(benchmark::State& state) {
  const ParamVector p = nn::init_params(kDesk, 0);
  const nn::Batch b = random_batch(32, 1);
  const cl::ReplayDraw replay = random_replay(32, 2);
  const auto objective = cl::ObjectiveConfig::preset(cl::Method::er, 1.0);
  const auto fisher = fisher::DiagFisher::identity(p.size());
  refresh::RefreshConfig config;
  config.interval = 1;
  config.noise_enabled = state.range(0) != 0;
  std::mt19937_64 rng(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(refresh::refresh_train_step(kDesk, p, b, replay, objective, fisher, config, 0.05, 1, rng));
}
BENCHMARK(RefreshStepEr)->Arg(0)->Arg(1)->ArgName("noise");

void UnlearnNoise(benchmark::State& state) {
  const ParamVector p = nn::init_params(kDesk, 0);
  const auto fisher = fisher::DiagFisher::identity(p.size());
  refresh::RefreshConfig config;
  std::mt19937_64 rng(4);
  const refresh::GradFn zero = [&](const ParamVector&) { return ParamVector(p.size()); };
  for (auto _ : state) benchmark::DoNotOptimize(refresh::unlearn_step(p, zero, fisher, config, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}
BENCHMARK(UnlearnNoise);

void FisherEstimate(benchmark::State& state) {
  const ParamVector p = nn::init_params(kDesk, 0);
  const nn::Batch b = random_batch(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(fisher::estimate_diag_fisher(kDesk, p, std::span<const nn::Batch>(&b, 1)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(FisherEstimate)->Arg(256)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
