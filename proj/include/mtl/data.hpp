#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtl/matrix.hpp"
#include "mtl/task.hpp"

namespace mtl {

struct Dataset {
  Matrix features;                       // N x D
  std::vector<std::vector<int>> labels;  // one column per task, length N
  std::vector<TaskSpec> tasks;
  std::string name;

  int size() const { return features.rows(); }
  void validate() const;  // label lengths and ranges
};

// Synthetic generator config. All task labels derive from one shared latent
// draw per sample, which is what induces the cross-task correlation.
struct GenConfig {
  int n = 2000;
  int latent_dim = 6;
  int feature_dim = 16;
  std::vector<TaskSpec> tasks;
  std::vector<double> label_noise;  // per task, in [0, 0.5); empty = all zero
  uint64_t seed = 1;

  void validate() const;
};

Dataset generate(const GenConfig& cfg);

/// CSV with header feat_0,...,feat_{D-1},task:<name>,... Features are written
/// with 9 significant digits, labels as integers.
void save_csv(const Dataset& ds, const std::string& path);

/// Loads and validates against the given task specs (header must match).
/// Errors carry the 1-based line number.
Dataset load_csv(const std::string& path, const std::vector<TaskSpec>& tasks);

/// Seeded shuffle then partition; the test part gets round(n * test_fraction)
/// samples. Throws if either part would be empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, uint64_t seed);

}  // namespace mtl
