#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtl/data.hpp"
#include "mtl/metrics.hpp"
#include "mtl/net.hpp"
#include "mtl/rng.hpp"

namespace mtl {

enum class TrainMode { full, no_uncertainty, no_ordinal_opt };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 80;
  double learning_rate = 0.001;
  double weight_decay = 0.0005;
  int batch_size = 32;
  double momentum = 0.9;
  uint64_t seed = 1;
  TrainMode mode = TrainMode::full;
  std::vector<double> fixed_beta;  // required for no_uncertainty, sums to 1
  bool trace_steps = false;

  void validate(size_t num_tasks) const;
};

struct EpochTrace {
  int epoch = 0;
  int step = 0;  // 0 for per-epoch rows
  double joint_loss = 0.0;
  std::vector<double> task_loss;
  std::vector<double> log_var;
  std::vector<double> sigma_sq;
  std::vector<double> beta;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochTrace> trace;        // one row per epoch
  std::vector<EpochTrace> step_trace;   // filled only when trace_steps is set
};

/// Seeded shuffle of 0..n-1 chopped into batches; the last partial batch is
/// kept. Every sample appears exactly once per call.
std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng);

/// The epoch/batch loop: per-task losses dispatched by task kind, combined
/// into the joint objective, parameters and log-variances updated by SGD
/// with momentum and weight decay. Epoch rows carry batch-averaged losses
/// and end-of-epoch log_var / sigma^2 / beta.
TrainResult train(const NetConfig& net_cfg, const TrainConfig& train_cfg, const Dataset& data);

/// Nominal: argmax class (lowest index on ties). Ordinal: decoded rank.
std::vector<std::vector<int>> predict(const ModelParams& params, const std::vector<TaskSpec>& tasks,
                                      const Matrix& features);

MetricsReport evaluate(const ModelParams& params, const std::vector<TaskSpec>& tasks,
                       const Dataset& ds);

// One trained arm. net_cfg is the config actually trained (no_ordinal_opt
// swaps ordinal heads for plain multiclass ones); the report is always in the
// dataset's original label space so arms stay comparable.
struct ModeRun {
  TrainMode mode = TrainMode::full;
  uint64_t seed = 0;
  NetConfig net_cfg;
  ModelParams params;
  std::vector<EpochTrace> trace;
  std::vector<EpochTrace> step_trace;
  MetricsReport test_report;
};

ModeRun run_mode(const NetConfig& net_cfg, const TrainConfig& train_cfg, const Dataset& train_ds,
                 const Dataset& test_ds);

/// Trains {full, no_uncertainty (equal fixed weights), no_ordinal_opt} under
/// the same seed and returns one ModeRun per mode, in that order.
std::vector<ModeRun> ablation_run(const NetConfig& net_cfg, const TrainConfig& train_cfg,
                                  const Dataset& train_ds, const Dataset& test_ds);

}  // namespace mtl
