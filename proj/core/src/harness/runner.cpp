#include "clref/harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "clref/error.hpp"
#include "clref/refresh.hpp"

namespace clref::harness {

namespace {

using Clock = std::chrono::steady_clock;

fisher::DiagFisher scaled_to_unit_mean(fisher::DiagFisher f) {
  double mean = 0.0;
  for (double v : f.values) mean += v;
  mean /= static_cast<double>(f.values.size());
  if (mean > 0.0)
    for (double& v : f.values) v /= mean;
  return f;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent streams derived from the run seed.
std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t{words[0]} << 32) | words[1];
}

nn::Batch concat(const std::vector<const nn::Batch*>& parts) {
  std::size_t rows = 0;
  for (const auto* p : parts) rows += p->size();
  nn::Batch out{Matrix(rows, parts.front()->inputs.cols), {}};
  out.labels.reserve(rows);
  std::size_t at = 0;
  for (const auto* p : parts) {
    std::copy(p->inputs.data.begin(), p->inputs.data.end(), out.inputs.data.begin() + static_cast<long>(at));
    at += p->inputs.data.size();
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
  }
  return out;
}

}  // namespace

StreamSpec stream_for_seed(const StreamSpec& spec, std::uint64_t seed) {
  StreamSpec s = spec;
  s.seed = spec.seed + 7919 * seed;
  return s;
}

double masked_accuracy(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                       const std::vector<int>& classes) {
  batch.validate(spec);
  const Matrix logits = nn::forward(spec, params, batch.inputs);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < logits.rows; ++n) {
    const auto row = logits.row(n);
    int best = classes.front();
    for (int c : classes)
      if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)]) best = c;
    if (best == batch.labels[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.size());
}

RunResult run_sequence(const RunConfig& config, const TaskStream& stream, std::uint64_t seed) {
  config.network.validate();
  config.objective.validate();
  config.refresh.config.validate();
  require(!stream.tasks.empty(), "run_sequence: empty task stream");
  require(config.network.input_dim() == stream.input_dim, "run_sequence: network input dim does not match the stream");
  require(config.network.num_classes() == stream.num_classes,
          "run_sequence: network output dim does not match the stream's class count");

  const auto t_start = Clock::now();
  const nn::NetworkSpec& spec = config.network;
  const std::size_t n_tasks = stream.tasks.size();

  RunResult result;
  result.seed = seed;
  result.accuracy = AccuracyMatrix(n_tasks);

  ParamVector params = nn::init_params(spec, derive(seed, 1));
  std::mt19937_64 shuffle_rng(derive(seed, 2));
  std::mt19937_64 replay_rng(derive(seed, 3));
  std::mt19937_64 noise_rng(derive(seed ^ config.refresh.config.rng_seed, 4));
  cl::ReplayBuffer buffer(config.buffer_capacity, derive(seed, 5));

  cl::ObjectiveConfig objective = config.objective;
  const bool is_joint = objective.method == cl::Method::joint;
  const bool needs_fisher = objective.method == cl::Method::oewc || objective.uses_weight_penalty() ||
                            config.refresh.enabled;
  std::optional<ParamVector> theta_old;
  std::optional<fisher::DiagFisher> fisher_acc;
  fisher::DiagFisher refresh_fisher = fisher::DiagFisher::identity(params.size(), config.fisher.damping);

  std::uint64_t iteration = 0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const Task& task = stream.tasks[t];
    const auto t_train = Clock::now();

    nn::Batch joint_data;
    if (is_joint) {
      std::vector<const nn::Batch*> parts;
      for (std::size_t k = 0; k <= t; ++k) parts.push_back(&stream.tasks[k].train);
      joint_data = concat(parts);
    }
    const nn::Batch& train = is_joint ? joint_data : task.train;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs_per_task; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        const nn::Batch batch =
            nn::gather(train, std::span<const std::size_t>(order.data() + begin, end - begin));
        ++iteration;

        const cl::ReplayDraw replay = cl::draw_replay(buffer, objective, replay_rng);
        refresh::StepResult step;
        try {
          step = config.refresh.enabled
                     ? refresh::refresh_train_step(spec, params, batch, replay, objective, refresh_fisher,
                                                   config.refresh.config, config.learning_rate, iteration, noise_rng)
                     : refresh::plain_train_step(spec, params, batch, replay, objective, config.learning_rate);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(iteration), iteration);
        }
        if (!std::isfinite(step.diagnostics.loss))
          throw NumericError("non-finite loss at iteration " + std::to_string(iteration), iteration);

        if (objective.uses_replay()) {
          // Logits at the parameters the step started from.
          const Matrix logits = nn::forward(spec, params, batch.inputs);
          for (std::size_t r = 0; r < batch.size(); ++r) {
            const auto x = batch.inputs.row(r);
            const auto z = logits.row(r);
            buffer.insert(cl::ReplayItem{{x.begin(), x.end()}, batch.labels[r], {z.begin(), z.end()},
                                         static_cast<int>(t)});
          }
        }

        params = std::move(step.params);
        if (step.diagnostics.kind == refresh::StepKind::refresh) ++result.diagnostics.refresh_steps;
        else ++result.diagnostics.plain_steps;
        result.diagnostics.capped_unlearn_steps += static_cast<std::uint64_t>(step.diagnostics.capped_steps);
        result.diagnostics.final_loss = step.diagnostics.loss;
      }
    }
    const double train_s = seconds_since(t_train);
    result.timings.task_train_seconds.push_back(train_s);
    result.timings.train_seconds += train_s;

    if (needs_fisher) {
      const auto t_fisher = Clock::now();
      const nn::Batch* data = &task.train;
      const fisher::DiagFisher task_fisher = fisher::estimate_diag_fisher(
          spec, params, std::span<const nn::Batch>(data, 1), config.fisher.max_examples, config.fisher.damping);
      const double decay = config.oewc_decay;
      cl::Consolidation cons = cl::consolidate_oewc(theta_old, fisher_acc, params, task_fisher, decay);
      theta_old = cons.theta_old;
      fisher_acc = cons.fisher;
      if (objective.uses_weight_penalty()) {
        objective.theta_old = theta_old;
        objective.fisher = fisher_acc;
      }
      refresh_fisher = config.refresh.fisher_source == FisherSource::accumulated ? *fisher_acc : task_fisher;
      if (config.refresh.fisher_scaling == FisherScaling::mean) refresh_fisher = scaled_to_unit_mean(refresh_fisher);
      if (config.refresh.fisher_scaling == FisherScaling::identity)
        refresh_fisher = fisher::DiagFisher::identity(params.size(), refresh_fisher.damping);
      if (config.refresh.fisher_damping) refresh_fisher.damping = *config.refresh.fisher_damping;
      result.timings.fisher_seconds += seconds_since(t_fisher);
    }

    const auto t_eval = Clock::now();
    for (std::size_t i = 0; i <= t; ++i) {
      const Task& seen = stream.tasks[i];
      const double acc = stream.scenario == Scenario::task_il
                             ? masked_accuracy(spec, params, seen.test, seen.classes)
                             : nn::accuracy(spec, params, seen.test);
      result.accuracy.set(t, i, acc);
    }
    result.timings.eval_seconds += seconds_since(t_eval);
  }

  result.final_params = std::move(params);
  result.timings.total_seconds = seconds_since(t_start);
  return result;
}

RunResult run_sequence(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  return run_sequence(config, build_task_stream(stream_for_seed(config.stream, seed)), seed);
}

}  // namespace clref::harness
