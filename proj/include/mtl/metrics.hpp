#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtl/task.hpp"

namespace mtl {

double accuracy(std::span<const int> preds, std::span<const int> labels);

struct MaeMse {
  double mae = 0.0;
  double mse = 0.0;
};

MaeMse mae_mse(std::span<const int> preds, std::span<const int> labels);

/// CS(i) = fraction of samples with |pred - label| <= i, for i = 0..K-1.
/// Inputs are ranks in [1..K]. Nondecreasing, ends at 1.
std::vector<double> cumulative_score(std::span<const int> preds, std::span<const int> labels,
                                     int num_ranks);

/// Entry (r, c) = count of samples with label r predicted as c. Values must
/// lie in [0, num_classes).
std::vector<std::vector<int64_t>> confusion_matrix(std::span<const int> preds,
                                                   std::span<const int> labels, int num_classes);

struct TaskMetrics {
  std::string task;
  TaskKind kind = TaskKind::nominal;
  int levels = 0;
  double accuracy = 0.0;
  double mae = 0.0;  // ordinal only
  double mse = 0.0;  // ordinal only
  std::vector<double> cs;                        // ordinal only, length = levels
  std::vector<std::vector<int64_t>> confusion;   // levels x levels
};

struct MetricsReport {
  int samples = 0;
  std::vector<TaskMetrics> tasks;
};

/// Per-task metrics in the task's own label space (nominal 0-based classes,
/// ordinal 1-based ranks).
TaskMetrics task_metrics(const TaskSpec& spec, std::span<const int> preds,
                         std::span<const int> labels);

}  // namespace mtl
