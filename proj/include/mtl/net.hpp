#pragma once

#include <cstdint>
#include <vector>

#include "mtl/matrix.hpp"
#include "mtl/task.hpp"

namespace mtl {

struct NetConfig {
  int input_dim = 1;
  std::vector<int> trunk_layers;  // hidden widths, at least one
  std::vector<TaskSpec> tasks;
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct DenseLayer {
  Matrix w;               // fan_in x fan_out
  std::vector<double> b;  // fan_out
};

// Shared-trunk weights, one affine head per task, and one log-variance
// scalar s_t = log sigma_t^2 per task.
struct ModelParams {
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> heads;
  std::vector<double> log_var;
};

// Same shape tree as ModelParams, entries are partials of the joint loss.
using Gradients = ModelParams;

bool same_shape(const ModelParams& a, const ModelParams& b);
bool all_finite(const ModelParams& p);
bool equal_params(const ModelParams& a, const ModelParams& b);

/// Weights uniform in (-a, a) with a = 1/sqrt(fan_in), biases zero, every
/// log_var zero (sigma^2 = 1). Deterministic in cfg.seed.
ModelParams init_params(const NetConfig& cfg);

/// Per-task logit matrices, B x head_width. ReLU in the trunk, affine heads
/// (softmax/sigmoid live in the losses).
std::vector<Matrix> forward(const ModelParams& params, const Matrix& features);

// How per-task losses combine into the training objective: either the
// learnable uncertainty weighting, or fixed weights with log_var frozen.
struct LossDef {
  bool learn_uncertainty = true;
  std::vector<double> fixed_beta;  // used when learn_uncertainty is false
};

struct BackwardResult {
  double joint_loss = 0.0;
  std::vector<double> task_loss;  // per-task mean losses
  Gradients grads;
};

/// Reverse-mode gradients of the joint loss with respect to every parameter,
/// including log_var (which picks up both the exp(-s)*L term and the s/2
/// regularizer). Labels are one vector per task, nominal classes 0-based,
/// ordinal ranks 1-based.
BackwardResult backward(const ModelParams& params, const Matrix& features,
                        const std::vector<std::vector<int>>& labels,
                        const std::vector<TaskSpec>& tasks, const LossDef& loss_def);

struct OptimState {
  Gradients velocity;  // zero-initialized, same shapes as the params
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
};

OptimState make_optim_state(const ModelParams& params, double learning_rate, double momentum,
                            double weight_decay);

/// v <- momentum*v + g + weight_decay*p (decay on trunk and head weights
/// only, never biases or log_var), then p <- p - lr*v. Throws on a
/// non-finite update, leaving params and state untouched.
void sgd_step(ModelParams& params, const Gradients& grads, OptimState& state);

}  // namespace mtl
