#pragma once

#include <span>
#include <vector>

namespace mtl {

struct JointLoss {
  double value = 0.0;
  std::vector<double> dtask_loss;  // d(joint)/d(L_t) = exp(-s_t)
  std::vector<double> dlog_var;    // d(joint)/d(s_t)  = -exp(-s_t) * L_t + 1/2
};

/// Combines per-task losses into the uncertainty-weighted objective
///   joint = sum_t [ exp(-s_t) * L_t + s_t / 2 ]
/// where s_t = log sigma_t^2. With all s_t = 0 this is the plain sum.
JointLoss joint_loss(std::span<const double> task_losses, std::span<const double> log_var);

/// Normalized task weights beta_t = (1/sigma_t^2) / sum_j (1/sigma_j^2),
/// computed as a softmax over -s_t. Always sums to 1.
std::vector<double> beta_weights(std::span<const double> log_var);

/// Closed-form minimizer s* = ln(2L) of exp(-s)*L + s/2 in s. Test oracle for
/// the stationary point the optimizer should find when L is held fixed.
double optimal_log_var(double task_loss);

}  // namespace mtl
