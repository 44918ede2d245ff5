#include "clref/harness/task_stream.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "clref/error.hpp"
#include "clref/harness/idx.hpp"

namespace clref::harness {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::domain_il: return "domain_il";
    case Scenario::class_il: return "class_il";
    case Scenario::task_il: return "task_il";
  }
  return "?";
}

Scenario scenario_from_string(std::string_view s) {
  for (Scenario v : {Scenario::domain_il, Scenario::class_il, Scenario::task_il})
    if (to_string(v) == s) return v;
  throw ContractError("unknown scenario '" + std::string(s) + "'");
}

std::string_view to_string(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::permuted: return "permuted";
    case GeneratorKind::rotated: return "rotated";
    case GeneratorKind::split_classes: return "split_classes";
    case GeneratorKind::synthetic_gaussian: return "synthetic_gaussian";
  }
  return "?";
}

GeneratorKind generator_from_string(std::string_view s) {
  for (GeneratorKind v : {GeneratorKind::permuted, GeneratorKind::rotated, GeneratorKind::split_classes,
                          GeneratorKind::synthetic_gaussian})
    if (to_string(v) == s) return v;
  throw ContractError("unknown generator '" + std::string(s) + "'");
}

void StreamSpec::validate() const {
  require(num_tasks >= 1, "StreamSpec: num_tasks must be >= 1");
  if (uses_files()) {
    require(!train_images.empty() && !train_labels.empty() && !test_images.empty() && !test_labels.empty(),
            "StreamSpec: file-backed generators need train/test image and label paths");
    require(train_per_task >= 1 && test_per_task >= 1, "StreamSpec: per-task sizes must be positive");
  } else {
    require(input_dim >= 1 && classes_per_task >= 1 && train_per_class >= 1 && test_per_class >= 1,
            "StreamSpec: synthetic sizes must be positive");
    require(covariance_scale >= 0.0 && mean_radius >= 0.0, "StreamSpec: synthetic scales must be >= 0");
  }
  if (generator == GeneratorKind::rotated && !angles_deg.empty())
    require(angles_deg.size() == num_tasks, "StreamSpec: need one rotation angle per task");
}

BaseData load_base_data(const StreamSpec& spec) {
  spec.validate();
  IdxDataset train = load_idx_dataset(spec.train_images, spec.train_labels);
  IdxDataset test = load_idx_dataset(spec.test_images, spec.test_labels);
  require(train.image_rows == test.image_rows && train.image_cols == test.image_cols,
          "base data: train and test image sizes differ");
  return BaseData{std::move(train.data), std::move(test.data), train.image_rows, train.image_cols};
}

std::vector<std::size_t> task_permutation(std::size_t dim, std::uint64_t seed, std::size_t task) {
  std::vector<std::size_t> perm(dim);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (task == 0) return perm;
  std::mt19937_64 rng(seed * 1000003ULL + task);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<double> rotate_image(std::span<const double> image, std::size_t rows, std::size_t cols, double degrees) {
  require(image.size() == rows * cols, "rotate_image: size does not match shape");
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (static_cast<double>(rows) - 1.0) / 2.0;
  const double cx = (static_cast<double>(cols) - 1.0) / 2.0;
  std::vector<double> out(image.size(), 0.0);
  auto at = [&](long r, long q) {
    if (r < 0 || q < 0 || r >= static_cast<long>(rows) || q >= static_cast<long>(cols)) return 0.0;
    return image[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(q)];
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) {
      // Inverse-map the destination pixel into the source image.
      const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(q) - cx;
      const double sy = c * dy + s * dx + cy;
      const double sx = -s * dy + c * dx + cx;
      const long y0 = static_cast<long>(std::floor(sy)), x0 = static_cast<long>(std::floor(sx));
      const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
      out[r * cols + q] = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                          fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
    }
  }
  return out;
}

namespace {

nn::Batch head(const nn::Batch& src, std::size_t n) {
  n = std::min(n, src.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return nn::gather(src, idx);
}

nn::Batch permute_columns(const nn::Batch& src, const std::vector<std::size_t>& perm) {
  nn::Batch out{Matrix(src.inputs.rows, src.inputs.cols), src.labels};
  for (std::size_t n = 0; n < src.inputs.rows; ++n) {
    const auto in = src.inputs.row(n);
    auto o = out.inputs.row(n);
    for (std::size_t j = 0; j < perm.size(); ++j) o[j] = in[perm[j]];
  }
  return out;
}

nn::Batch rotate_all(const nn::Batch& src, std::size_t rows, std::size_t cols, double degrees) {
  nn::Batch out{Matrix(src.inputs.rows, src.inputs.cols), src.labels};
  for (std::size_t n = 0; n < src.inputs.rows; ++n) {
    const auto r = rotate_image(src.inputs.row(n), rows, cols, degrees);
    std::copy(r.begin(), r.end(), out.inputs.row(n).begin());
  }
  return out;
}

int max_label(const nn::Batch& b) { return *std::max_element(b.labels.begin(), b.labels.end()); }

std::vector<int> range_classes(int begin, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

TaskStream build_synthetic(const StreamSpec& spec) {
  const std::size_t cpt = spec.classes_per_task;
  TaskStream stream;
  stream.scenario = spec.scenario;
  stream.input_dim = spec.input_dim;
  stream.num_classes = spec.scenario == Scenario::domain_il ? cpt : cpt * spec.num_tasks;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_means = [&] {
    std::vector<std::vector<double>> means(cpt, std::vector<double>(spec.input_dim));
    for (auto& m : means) {
      double len = 0.0;
      do {
        for (double& v : m) v = normal(rng);
        len = norm2(m);
      } while (len == 0.0);
      for (double& v : m) v *= spec.mean_radius / len;
    }
    return means;
  };
  const auto first_means = draw_means();

  for (std::size_t k = 0; k < spec.num_tasks; ++k) {
    const auto means = (k == 0 || spec.shared_means) ? first_means : draw_means();
    Task task;
    task.id = k;
    auto label_of = [&](std::size_t c) -> int {
      if (spec.scenario == Scenario::domain_il)
        return static_cast<int>((c + k * spec.label_shift_per_task) % cpt);
      return static_cast<int>(k * cpt + c);
    };
    task.classes = spec.scenario == Scenario::domain_il ? range_classes(0, static_cast<int>(cpt))
                                                        : range_classes(static_cast<int>(k * cpt), static_cast<int>(cpt));
    auto sample = [&](std::size_t per_class) {
      nn::Batch b{Matrix(per_class * cpt, spec.input_dim), {}};
      std::size_t row = 0;
      for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < cpt; ++c, ++row) {
          auto x = b.inputs.row(row);
          for (std::size_t j = 0; j < spec.input_dim; ++j) x[j] = means[c][j] + spec.covariance_scale * normal(rng);
          b.labels.push_back(label_of(c));
        }
      }
      return b;
    };
    task.train = sample(spec.train_per_class);
    task.test = sample(spec.test_per_class);
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

}  // namespace

TaskStream build_task_stream(const StreamSpec& spec, const BaseData& base) {
  spec.validate();
  if (spec.generator == GeneratorKind::synthetic_gaussian) return build_synthetic(spec);

  require(base.train.size() > 0 && base.test.size() > 0, "build_task_stream: base data is empty");
  const nn::Batch train = head(base.train, spec.train_per_task);
  const nn::Batch test = head(base.test, spec.test_per_task);
  const int base_classes = std::max(max_label(base.train), max_label(base.test)) + 1;

  TaskStream stream;
  stream.scenario = spec.scenario;
  stream.input_dim = train.inputs.cols;

  switch (spec.generator) {
    case GeneratorKind::permuted:
    case GeneratorKind::rotated: {
      stream.num_classes = static_cast<std::size_t>(base_classes);
      for (std::size_t k = 0; k < spec.num_tasks; ++k) {
        Task task;
        task.id = k;
        task.classes = range_classes(0, base_classes);
        if (spec.generator == GeneratorKind::permuted) {
          const auto perm = task_permutation(stream.input_dim, spec.seed, k);
          task.train = permute_columns(train, perm);
          task.test = permute_columns(test, perm);
        } else {
          require(base.image_rows * base.image_cols == stream.input_dim, "rotated: base data is not image-shaped");
          const double angle = spec.angles_deg.empty()
                                   ? 180.0 * static_cast<double>(k) / static_cast<double>(spec.num_tasks)
                                   : spec.angles_deg[k];
          task.train = rotate_all(train, base.image_rows, base.image_cols, angle);
          task.test = rotate_all(test, base.image_rows, base.image_cols, angle);
        }
        stream.tasks.push_back(std::move(task));
      }
      break;
    }
    case GeneratorKind::split_classes: {
      const auto n = static_cast<int>(spec.num_tasks);
      if (base_classes % n != 0)
        throw ContractError("split_classes: " + std::to_string(base_classes) + " classes do not divide into " +
                            std::to_string(n) + " tasks");
      const int per = base_classes / n;
      stream.num_classes = spec.scenario == Scenario::domain_il ? static_cast<std::size_t>(per)
                                                                : static_cast<std::size_t>(base_classes);
      for (int k = 0; k < n; ++k) {
        auto pick = [&](const nn::Batch& src) {
          std::vector<std::size_t> idx;
          for (std::size_t r = 0; r < src.size(); ++r)
            if (src.labels[r] / per == k) idx.push_back(r);
          nn::Batch b = nn::gather(src, idx);
          if (spec.scenario == Scenario::domain_il)
            for (int& y : b.labels) y -= k * per;
          return b;
        };
        Task task;
        task.id = static_cast<std::size_t>(k);
        task.classes = spec.scenario == Scenario::domain_il ? range_classes(0, per) : range_classes(k * per, per);
        task.train = pick(train);
        task.test = pick(test);
        require(task.train.size() > 0 && task.test.size() > 0, "split_classes: a task has no examples");
        stream.tasks.push_back(std::move(task));
      }
      break;
    }
    case GeneratorKind::synthetic_gaussian:
      break;
  }
  return stream;
}

TaskStream build_task_stream(const StreamSpec& spec) {
  spec.validate();
  if (!spec.uses_files()) return build_synthetic(spec);
  return build_task_stream(spec, load_base_data(spec));
}

}  // namespace clref::harness
