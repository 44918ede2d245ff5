#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace clref::harness {

/// A[t][i]: test accuracy on task i after training stage t, for i <= t.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t num_tasks);
  /// From explicit lower-triangular rows (row t has t + 1 entries).
  static AccuracyMatrix from_rows(std::vector<std::vector<double>> rows);

  std::size_t num_tasks() const { return rows_.size(); }
  void set(std::size_t stage, std::size_t task, double value);
  std::optional<double> at(std::size_t stage, std::size_t task) const;
  bool complete() const;
  /// Lower-triangular rows; unset entries are NaN.
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&);

 private:
  std::vector<std::vector<double>> rows_;
};

struct Metrics {
  double acc = 0.0;
  std::optional<double> bwt;  // absent for a single task

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// ACC = mean of the last row; BWT = mean over i < N of A[N][i] - A[i][i].
Metrics compute_metrics(const AccuracyMatrix& a);

}  // namespace clref::harness
