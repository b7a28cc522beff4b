#include "mtl/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mtl {

JointLoss joint_loss(std::span<const double> task_losses, std::span<const double> log_var) {
  if (task_losses.size() != log_var.size())
    throw std::invalid_argument("joint_loss: " + std::to_string(task_losses.size()) +
                                " losses but " + std::to_string(log_var.size()) + " log-variances");
  if (task_losses.empty()) throw std::invalid_argument("joint_loss: no tasks");

  JointLoss out;
  out.dtask_loss.resize(task_losses.size());
  out.dlog_var.resize(task_losses.size());
  for (size_t t = 0; t < task_losses.size(); ++t) {
    if (!std::isfinite(task_losses[t]))
      throw std::runtime_error("joint_loss: non-finite loss for task " + std::to_string(t));
    if (!std::isfinite(log_var[t]))
      throw std::runtime_error("joint_loss: non-finite log_var for task " + std::to_string(t));
    const double precision = std::exp(-log_var[t]);  // 1 / sigma_t^2
    out.value += precision * task_losses[t] + 0.5 * log_var[t];
    out.dtask_loss[t] = precision;
    out.dlog_var[t] = -precision * task_losses[t] + 0.5;
  }
  return out;
}

std::vector<double> beta_weights(std::span<const double> log_var) {
  if (log_var.empty()) throw std::invalid_argument("beta_weights: no tasks");
  // softmax over -s_t; shift by the max for stability
  double m = -log_var[0];
  for (double s : log_var) m = std::max(m, -s);
  std::vector<double> beta(log_var.size());
  double sum = 0.0;
  for (size_t t = 0; t < log_var.size(); ++t) {
    beta[t] = std::exp(-log_var[t] - m);
    sum += beta[t];
  }
  for (double& b : beta) b /= sum;
  return beta;
}

double optimal_log_var(double task_loss) {
  if (!(task_loss > 0.0))
    throw std::invalid_argument("optimal_log_var: loss must be positive, got " +
                                std::to_string(task_loss));
  return std::log(2.0 * task_loss);
}

}  // namespace mtl
