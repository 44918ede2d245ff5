#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clref/nn.hpp"

namespace clref::harness {

enum class Scenario { domain_il, class_il, task_il };
enum class GeneratorKind { permuted, rotated, split_classes, synthetic_gaussian };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view s);
std::string_view to_string(GeneratorKind g);
GeneratorKind generator_from_string(std::string_view s);

struct StreamSpec {
  GeneratorKind generator = GeneratorKind::permuted;
  Scenario scenario = Scenario::domain_il;
  std::size_t num_tasks = 5;
  std::uint64_t seed = 0;

  // Base data for permuted / rotated / split_classes.
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t train_per_task = 5000;  // taken from the front of the base split
  std::size_t test_per_task = 1000;

  // rotated: one angle per task in degrees; empty means evenly spaced in [0, 180).
  std::vector<double> angles_deg;

  // synthetic_gaussian
  std::size_t input_dim = 20;
  std::size_t classes_per_task = 2;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 50;
  double mean_radius = 3.0;
  double covariance_scale = 1.0;
  bool shared_means = false;           // every task reuses task 1's class means
  std::size_t label_shift_per_task = 0;  // domain_il: task k relabels class c as (c + k*shift) mod C

  void validate() const;
  bool uses_files() const { return generator != GeneratorKind::synthetic_gaussian; }

  friend bool operator==(const StreamSpec&, const StreamSpec&) = default;
};

struct Task {
  std::size_t id = 0;
  nn::Batch train;
  nn::Batch test;
  std::vector<int> classes;  // labels this task uses (the task-IL mask)
};

struct TaskStream {
  Scenario scenario = Scenario::domain_il;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<Task> tasks;
};

/// Base data for file-backed generators: image side lengths are needed
/// by the rotated generator.
struct BaseData {
  nn::Batch train;
  nn::Batch test;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

BaseData load_base_data(const StreamSpec& spec);

/// Deterministic in (spec, base). `base` is ignored for synthetic_gaussian.
TaskStream build_task_stream(const StreamSpec& spec, const BaseData& base);

/// Loads base data when the generator needs it, then builds.
TaskStream build_task_stream(const StreamSpec& spec);

/// Pixel permutation used for task k of a permuted stream (identity for k = 0).
std::vector<std::size_t> task_permutation(std::size_t dim, std::uint64_t seed, std::size_t task);

/// Rotates a rows x cols image about its center (bilinear, zero fill).
std::vector<double> rotate_image(std::span<const double> image, std::size_t rows, std::size_t cols, double degrees);

}  // namespace clref::harness
