#include "mtl/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mtl {

namespace {

void check_lengths(std::span<const int> preds, std::span<const int> labels, const char* op) {
  if (preds.empty()) throw std::invalid_argument(std::string(op) + ": empty input");
  if (preds.size() != labels.size())
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_lengths(preds, labels, "accuracy");
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

MaeMse mae_mse(std::span<const int> preds, std::span<const int> labels) {
  check_lengths(preds, labels, "mae_mse");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - labels[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const double n = static_cast<double>(preds.size());
  return {abs_sum / n, sq_sum / n};
}

std::vector<double> cumulative_score(std::span<const int> preds, std::span<const int> labels,
                                     int num_ranks) {
  check_lengths(preds, labels, "cumulative_score");
  if (num_ranks < 2) throw std::invalid_argument("cumulative_score: num_ranks must be >= 2");
  std::vector<int64_t> err_counts(num_ranks, 0);
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 1 || preds[i] > num_ranks || labels[i] < 1 || labels[i] > num_ranks)
      throw std::invalid_argument("cumulative_score: value out of range [1," +
                                  std::to_string(num_ranks) + "] at index " + std::to_string(i));
    ++err_counts[std::abs(preds[i] - labels[i])];
  }
  std::vector<double> cs(num_ranks);
  int64_t within = 0;
  for (int i = 0; i < num_ranks; ++i) {
    within += err_counts[i];
    cs[i] = static_cast<double>(within) / static_cast<double>(preds.size());
  }
  return cs;
}

std::vector<std::vector<int64_t>> confusion_matrix(std::span<const int> preds,
                                                   std::span<const int> labels, int num_classes) {
  check_lengths(preds, labels, "confusion_matrix");
  if (num_classes < 1) throw std::invalid_argument("confusion_matrix: num_classes must be >= 1");
  std::vector<std::vector<int64_t>> m(num_classes, std::vector<int64_t>(num_classes, 0));
  for (size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes || preds[i] < 0 || preds[i] >= num_classes)
      throw std::invalid_argument("confusion_matrix: value out of range [0," +
                                  std::to_string(num_classes) + ") at index " +
                                  std::to_string(i));
    ++m[labels[i]][preds[i]];
  }
  return m;
}

TaskMetrics task_metrics(const TaskSpec& spec, std::span<const int> preds,
                         std::span<const int> labels) {
  TaskMetrics tm;
  tm.task = spec.name;
  tm.kind = spec.kind;
  tm.levels = spec.levels;
  tm.accuracy = accuracy(preds, labels);
  if (spec.kind == TaskKind::ordinal) {
    const MaeMse err = mae_mse(preds, labels);
    tm.mae = err.mae;
    tm.mse = err.mse;
    tm.cs = cumulative_score(preds, labels, spec.levels);
    // ranks 1..K land in rows/columns 0..K-1
    std::vector<int> p0(preds.begin(), preds.end());
    std::vector<int> l0(labels.begin(), labels.end());
    for (int& v : p0) --v;
    for (int& v : l0) --v;
    tm.confusion = confusion_matrix(p0, l0, spec.levels);
  } else {
    tm.confusion = confusion_matrix(preds, labels, spec.levels);
  }
  return tm;
}

}  // namespace mtl
