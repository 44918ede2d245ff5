#include "clref/harness/metrics.hpp"

#include <cmath>
#include <limits>

#include "clref/error.hpp"

namespace clref::harness {

namespace {
constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
}

AccuracyMatrix::AccuracyMatrix(std::size_t num_tasks) {
  for (std::size_t t = 0; t < num_tasks; ++t) rows_.emplace_back(t + 1, kUnset);
}

AccuracyMatrix AccuracyMatrix::from_rows(std::vector<std::vector<double>> rows) {
  AccuracyMatrix m(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    require(rows[t].size() == t + 1, "AccuracyMatrix: row t must have t + 1 entries");
    for (std::size_t i = 0; i <= t; ++i) m.set(t, i, rows[t][i]);
  }
  return m;
}

void AccuracyMatrix::set(std::size_t stage, std::size_t task, double value) {
  require(stage < rows_.size() && task <= stage, "AccuracyMatrix: entry outside the lower triangle");
  require(value >= 0.0 && value <= 1.0, "AccuracyMatrix: accuracy must lie in [0, 1]");
  rows_[stage][task] = value;
}

std::optional<double> AccuracyMatrix::at(std::size_t stage, std::size_t task) const {
  if (stage >= rows_.size() || task > stage || std::isnan(rows_[stage][task])) return std::nullopt;
  return rows_[stage][task];
}

bool AccuracyMatrix::complete() const {
  for (const auto& r : rows_)
    for (double v : r)
      if (std::isnan(v)) return false;
  return !rows_.empty();
}

bool operator==(const AccuracyMatrix& a, const AccuracyMatrix& b) {
  if (a.rows_.size() != b.rows_.size()) return false;
  for (std::size_t t = 0; t < a.rows_.size(); ++t)
    for (std::size_t i = 0; i <= t; ++i) {
      const double x = a.rows_[t][i], y = b.rows_[t][i];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
  return true;
}

Metrics compute_metrics(const AccuracyMatrix& a) {
  require(a.complete(), "compute_metrics: accuracy matrix is incomplete");
  const std::size_t n = a.num_tasks();
  const auto& last = a.rows().back();
  Metrics m;
  double s = 0.0;
  for (double v : last) s += v;
  m.acc = s / static_cast<double>(n);
  if (n >= 2) {
    double b = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) b += last[i] - a.rows()[i][i];
    m.bwt = b / static_cast<double>(n - 1);
  }
  return m;
}

}  // namespace clref::harness
