#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtl/task.hpp"
#include "mtl/trainer.hpp"

namespace mtl {

// Config-class failure: bad key, bad value, missing required setting.
// The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EvalSplit { full, train, test };

// Flat `key = value` run configuration shared by all commands. Unknown keys
// are rejected.
struct RunConfig {
  // shared
  uint64_t seed = 1;
  std::vector<TaskSpec> tasks;  // "name:kind:levels" list; required by most commands

  // network
  int input_dim = 16;
  std::vector<int> trunk_layers = {32, 16};

  // training
  int epochs = 80;
  double learning_rate = 0.001;
  double weight_decay = 0.0005;
  int batch_size = 32;
  double momentum = 0.9;
  TrainMode mode = TrainMode::full;
  std::vector<double> fixed_beta;
  double test_fraction = 0.25;
  bool trace_steps = false;

  // generation
  int n = 2000;
  int latent_dim = 6;
  int feature_dim = 16;
  std::vector<double> label_noise;  // per task; empty = all zero

  // ablation / eval
  std::vector<uint64_t> ablation_seeds = {1, 2, 3, 4, 5};
  EvalSplit eval_split = EvalSplit::full;

  // paths (outputs are resolved against --out-dir)
  std::string data_in = "data.csv";
  std::string data_out = "data.csv";
  std::string trace_out = "trace.csv";
  std::string steps_trace_out = "steps.csv";
  std::string report_out = "report.txt";
  std::string model_in = "model.txt";
  std::string model_out = "model.txt";
};

/// Strict parser: `key = value` lines, `#` comments, no sections. Unknown
/// keys and out-of-range values raise ConfigError naming the key and line.
RunConfig parse_config_file(const std::string& path);

/// Same, from already-read text (for tests).
RunConfig parse_config_text(const std::string& text);

}  // namespace mtl
