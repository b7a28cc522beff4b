#include "mtl/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "mtl/losses.hpp"
#include "mtl/rng.hpp"
#include "mtl/uncertainty.hpp"

namespace mtl {

namespace {

std::vector<double> col_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    for (int j = 0; j < m.cols(); ++j) s[j] += row[j];
  }
  return s;
}

Matrix affine(const Matrix& x, const DenseLayer& layer, const std::string& where) {
  if (x.cols() != layer.w.rows())
    throw std::invalid_argument("forward: input width " + std::to_string(x.cols()) + " but " +
                                where + " expects " + std::to_string(layer.w.rows()));
  Matrix z = matmul(x, layer.w);
  for (int i = 0; i < z.rows(); ++i) {
    double* row = z.row(i);
    for (int j = 0; j < z.cols(); ++j) row[j] += layer.b[j];
  }
  return z;
}

void relu_inplace(Matrix& m) {
  for (double& x : m.data())
    if (x < 0.0) x = 0.0;
}

// acts[0] = features, acts[l+1] = post-ReLU output of trunk layer l
std::vector<Matrix> trunk_forward(const ModelParams& params, const Matrix& features) {
  std::vector<Matrix> acts;
  acts.reserve(params.trunk.size() + 1);
  acts.push_back(features);
  for (size_t l = 0; l < params.trunk.size(); ++l) {
    Matrix z = affine(acts.back(), params.trunk[l], "trunk layer " + std::to_string(l));
    relu_inplace(z);
    acts.push_back(std::move(z));
  }
  return acts;
}

ModelParams zero_like(const ModelParams& p) {
  ModelParams z;
  z.trunk.reserve(p.trunk.size());
  for (const auto& layer : p.trunk)
    z.trunk.push_back({Matrix(layer.w.rows(), layer.w.cols()),
                       std::vector<double>(layer.b.size(), 0.0)});
  z.heads.reserve(p.heads.size());
  for (const auto& layer : p.heads)
    z.heads.push_back({Matrix(layer.w.rows(), layer.w.cols()),
                       std::vector<double>(layer.b.size(), 0.0)});
  z.log_var.assign(p.log_var.size(), 0.0);
  return z;
}

}  // namespace

void NetConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("net config: input_dim must be >= 1");
  if (trunk_layers.empty()) throw std::invalid_argument("net config: trunk_layers must be non-empty");
  for (int w : trunk_layers)
    if (w < 1) throw std::invalid_argument("net config: trunk layer width must be >= 1");
  if (tasks.empty()) throw std::invalid_argument("net config: tasks must be non-empty");
  std::unordered_set<std::string> names;
  for (const auto& t : tasks) {
    t.validate();
    if (!names.insert(t.name).second)
      throw std::invalid_argument("net config: duplicate task name '" + t.name + "'");
  }
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.trunk.size() != b.trunk.size() || a.heads.size() != b.heads.size() ||
      a.log_var.size() != b.log_var.size())
    return false;
  auto layer_match = [](const DenseLayer& x, const DenseLayer& y) {
    return x.w.rows() == y.w.rows() && x.w.cols() == y.w.cols() && x.b.size() == y.b.size();
  };
  for (size_t i = 0; i < a.trunk.size(); ++i)
    if (!layer_match(a.trunk[i], b.trunk[i])) return false;
  for (size_t i = 0; i < a.heads.size(); ++i)
    if (!layer_match(a.heads[i], b.heads[i])) return false;
  return true;
}

bool all_finite(const ModelParams& p) {
  for (const auto& layer : p.trunk)
    if (!all_finite(layer.w) || !all_finite(layer.b)) return false;
  for (const auto& layer : p.heads)
    if (!all_finite(layer.w) || !all_finite(layer.b)) return false;
  return all_finite(p.log_var);
}

bool equal_params(const ModelParams& a, const ModelParams& b) {
  if (!same_shape(a, b)) return false;
  for (size_t i = 0; i < a.trunk.size(); ++i)
    if (!(a.trunk[i].w == b.trunk[i].w) || a.trunk[i].b != b.trunk[i].b) return false;
  for (size_t i = 0; i < a.heads.size(); ++i)
    if (!(a.heads[i].w == b.heads[i].w) || a.heads[i].b != b.heads[i].b) return false;
  return a.log_var == b.log_var;
}

ModelParams init_params(const NetConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  auto init_layer = [&rng](int fan_in, int fan_out) {
    DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.w.data()) w = rng.uniform(-a, a);
    return layer;
  };

  ModelParams params;
  int prev = cfg.input_dim;
  for (int width : cfg.trunk_layers) {
    params.trunk.push_back(init_layer(prev, width));
    prev = width;
  }
  for (const auto& task : cfg.tasks) params.heads.push_back(init_layer(prev, task.head_width()));
  params.log_var.assign(cfg.tasks.size(), 0.0);
  return params;
}

std::vector<Matrix> forward(const ModelParams& params, const Matrix& features) {
  const auto acts = trunk_forward(params, features);
  std::vector<Matrix> logits;
  logits.reserve(params.heads.size());
  for (size_t t = 0; t < params.heads.size(); ++t)
    logits.push_back(affine(acts.back(), params.heads[t], "head " + std::to_string(t)));
  return logits;
}

BackwardResult backward(const ModelParams& params, const Matrix& features,
                        const std::vector<std::vector<int>>& labels,
                        const std::vector<TaskSpec>& tasks, const LossDef& loss_def) {
  const size_t num_tasks = tasks.size();
  if (params.heads.size() != num_tasks || labels.size() != num_tasks ||
      params.log_var.size() != num_tasks)
    throw std::invalid_argument("backward: task count mismatch between params, labels, and specs");
  if (!loss_def.learn_uncertainty && loss_def.fixed_beta.size() != num_tasks)
    throw std::invalid_argument("backward: fixed_beta must have one weight per task");

  BackwardResult out;
  out.grads = zero_like(params);
  out.task_loss.resize(num_tasks);

  const auto acts = trunk_forward(params, features);
  const Matrix& h_last = acts.back();

  // Per-task losses and logit gradients, dispatched by task kind.
  std::vector<TaskLossGrad> task_grads(num_tasks);
  for (size_t t = 0; t < num_tasks; ++t) {
    try {
      const Matrix logits = affine(h_last, params.heads[t], "head '" + tasks[t].name + "'");
      task_grads[t] = tasks[t].kind == TaskKind::nominal
                          ? nominal_loss(logits, labels[t])
                          : ordinal_loss(logits, labels[t]);
    } catch (const std::exception& e) {
      throw std::runtime_error("task " + std::to_string(t) + " ('" + tasks[t].name +
                               "'): " + e.what());
    }
    if (!std::isfinite(task_grads[t].loss))
      throw std::runtime_error("task " + std::to_string(t) + " ('" + tasks[t].name +
                               "') produced a non-finite loss");
    out.task_loss[t] = task_grads[t].loss;
  }

  // Combine into the joint objective and get the per-task weights.
  std::vector<double> weights(num_tasks);
  if (loss_def.learn_uncertainty) {
    const JointLoss jl = joint_loss(out.task_loss, params.log_var);
    out.joint_loss = jl.value;
    weights = jl.dtask_loss;
    out.grads.log_var = jl.dlog_var;
  } else {
    for (size_t t = 0; t < num_tasks; ++t) {
      weights[t] = loss_def.fixed_beta[t];
      out.joint_loss += weights[t] * out.task_loss[t];
    }
    // log_var gradients stay zero: s is frozen in this mode
  }

  // Heads, then accumulate into the trunk output.
  Matrix grad_h(h_last.rows(), h_last.cols());
  for (size_t t = 0; t < num_tasks; ++t) {
    Matrix& gy = task_grads[t].dlogits;
    for (double& g : gy.data()) g *= weights[t];
    out.grads.heads[t].w = matmul_at_b(h_last, gy);
    out.grads.heads[t].b = col_sums(gy);
    const Matrix back = matmul_a_bt(gy, params.heads[t].w);
    for (size_t i = 0; i < grad_h.data().size(); ++i) grad_h.data()[i] += back.data()[i];
  }

  // Trunk, last layer to first. Post-activation h > 0 marks where ReLU passes.
  for (int l = static_cast<int>(params.trunk.size()) - 1; l >= 0; --l) {
    const Matrix& h_out = acts[l + 1];
    for (size_t i = 0; i < grad_h.data().size(); ++i)
      if (h_out.data()[i] <= 0.0) grad_h.data()[i] = 0.0;
    out.grads.trunk[l].w = matmul_at_b(acts[l], grad_h);
    out.grads.trunk[l].b = col_sums(grad_h);
    if (l > 0) grad_h = matmul_a_bt(grad_h, params.trunk[l].w);
  }

  return out;
}

OptimState make_optim_state(const ModelParams& params, double learning_rate, double momentum,
                            double weight_decay) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("optimizer: momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
  return OptimState{zero_like(params), learning_rate, momentum, weight_decay};
}

void sgd_step(ModelParams& params, const Gradients& grads, OptimState& state) {
  if (!same_shape(params, grads) || !same_shape(params, state.velocity))
    throw std::invalid_argument("sgd_step: shape trees do not match");

  ModelParams new_params = params;
  Gradients new_velocity = state.velocity;
  const double lr = state.learning_rate;
  const double mu = state.momentum;
  const double wd = state.weight_decay;

  auto update = [lr, mu](double& p, double& v, double g) {
    v = mu * v + g;
    p -= lr * v;
  };
  auto update_decayed = [lr, mu, wd](double& p, double& v, double g) {
    v = mu * v + g + wd * p;
    p -= lr * v;
  };

  for (size_t l = 0; l < params.trunk.size(); ++l) {
    auto& pw = new_params.trunk[l];
    auto& vw = new_velocity.trunk[l];
    for (size_t i = 0; i < pw.w.data().size(); ++i)
      update_decayed(pw.w.data()[i], vw.w.data()[i], grads.trunk[l].w.data()[i]);
    for (size_t i = 0; i < pw.b.size(); ++i) update(pw.b[i], vw.b[i], grads.trunk[l].b[i]);
  }
  for (size_t t = 0; t < params.heads.size(); ++t) {
    auto& pw = new_params.heads[t];
    auto& vw = new_velocity.heads[t];
    for (size_t i = 0; i < pw.w.data().size(); ++i)
      update_decayed(pw.w.data()[i], vw.w.data()[i], grads.heads[t].w.data()[i]);
    for (size_t i = 0; i < pw.b.size(); ++i) update(pw.b[i], vw.b[i], grads.heads[t].b[i]);
  }
  for (size_t t = 0; t < params.log_var.size(); ++t)
    update(new_params.log_var[t], new_velocity.log_var[t], grads.log_var[t]);

  if (!all_finite(new_params) || !all_finite(new_velocity))
    throw std::runtime_error("sgd_step: non-finite update");

  params = std::move(new_params);
  state.velocity = std::move(new_velocity);
}

}  // namespace mtl
