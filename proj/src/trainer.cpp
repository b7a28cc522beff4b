#include "mtl/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mtl/losses.hpp"
#include "mtl/uncertainty.hpp"

namespace mtl {

namespace {

constexpr double kBetaSumTol = 1e-9;

// no_ordinal_opt: ordinal tasks become plain multiclass heads with C = K.
NetConfig flatten_ordinal(const NetConfig& cfg) {
  NetConfig flat = cfg;
  for (auto& task : flat.tasks)
    if (task.kind == TaskKind::ordinal) task.kind = TaskKind::nominal;
  return flat;
}

// Rank labels 1..K map to class indices 0..K-1 so the specs above stay valid.
Dataset flatten_ordinal(const Dataset& ds) {
  Dataset flat = ds;
  for (size_t t = 0; t < flat.tasks.size(); ++t) {
    if (flat.tasks[t].kind != TaskKind::ordinal) continue;
    flat.tasks[t].kind = TaskKind::nominal;
    for (int& y : flat.labels[t]) --y;
  }
  return flat;
}

EpochTrace make_trace_row(int epoch, int step, double joint, std::vector<double> task_loss,
                          const std::vector<double>& log_var) {
  EpochTrace row;
  row.epoch = epoch;
  row.step = step;
  row.joint_loss = joint;
  row.task_loss = std::move(task_loss);
  row.log_var = log_var;
  row.sigma_sq.reserve(log_var.size());
  for (double s : log_var) row.sigma_sq.push_back(std::exp(s));
  row.beta = beta_weights(log_var);
  return row;
}

}  // namespace

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::full: return "full";
    case TrainMode::no_uncertainty: return "no_uncertainty";
    case TrainMode::no_ordinal_opt: return "no_ordinal_opt";
  }
  return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "full") return TrainMode::full;
  if (s == "no_uncertainty") return TrainMode::no_uncertainty;
  if (s == "no_ordinal_opt") return TrainMode::no_ordinal_opt;
  throw std::invalid_argument("unknown mode '" + s +
                              "' (expected full, no_uncertainty, or no_ordinal_opt)");
}

void TrainConfig::validate(size_t num_tasks) const {
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("train config: momentum must be in [0, 1)");
  if (mode == TrainMode::no_uncertainty) {
    if (fixed_beta.size() != num_tasks)
      throw std::invalid_argument("train config: mode no_uncertainty needs fixed_beta with one "
                                  "weight per task");
    double sum = 0.0;
    for (double b : fixed_beta) {
      if (!(b > 0.0)) throw std::invalid_argument("train config: fixed_beta entries must be > 0");
      sum += b;
    }
    if (std::abs(sum - 1.0) > kBetaSumTol)
      throw std::invalid_argument("train config: fixed_beta must sum to 1, got " +
                                  std::to_string(sum));
  }
}

std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(start + batch_size, n);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

TrainResult train(const NetConfig& net_cfg, const TrainConfig& train_cfg, const Dataset& data) {
  net_cfg.validate();
  train_cfg.validate(net_cfg.tasks.size());
  data.validate();
  if (data.features.cols() != net_cfg.input_dim)
    throw std::invalid_argument("train: dataset feature width " +
                                std::to_string(data.features.cols()) + " but net expects " +
                                std::to_string(net_cfg.input_dim));
  if (data.tasks.size() != net_cfg.tasks.size())
    throw std::invalid_argument("train: dataset task count does not match net config");
  for (size_t t = 0; t < data.tasks.size(); ++t) {
    const auto& a = data.tasks[t];
    const auto& b = net_cfg.tasks[t];
    if (a.name != b.name || a.kind != b.kind || a.levels != b.levels)
      throw std::invalid_argument("train: task '" + b.name + "' differs between net and dataset");
  }

  LossDef loss_def;
  loss_def.learn_uncertainty = train_cfg.mode != TrainMode::no_uncertainty;
  loss_def.fixed_beta = train_cfg.fixed_beta;

  TrainResult result;
  result.params = init_params(net_cfg);
  OptimState opt = make_optim_state(result.params, train_cfg.learning_rate, train_cfg.momentum,
                                    train_cfg.weight_decay);
  Rng shuffle_rng(train_cfg.seed);

  const size_t num_tasks = net_cfg.tasks.size();
  const int n = data.size();

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto batches = make_batches(n, train_cfg.batch_size, shuffle_rng);
    double joint_sum = 0.0;
    std::vector<double> loss_sums(num_tasks, 0.0);

    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      Matrix features(static_cast<int>(idx.size()), data.features.cols());
      for (size_t r = 0; r < idx.size(); ++r) {
        const double* src = data.features.row(idx[r]);
        std::copy(src, src + data.features.cols(), features.row(static_cast<int>(r)));
      }
      std::vector<std::vector<int>> labels(num_tasks);
      for (size_t t = 0; t < num_tasks; ++t) {
        labels[t].reserve(idx.size());
        for (int i : idx) labels[t].push_back(data.labels[t][i]);
      }

      try {
        const BackwardResult step = backward(result.params, features, labels, net_cfg.tasks,
                                             loss_def);
        sgd_step(result.params, step.grads, opt);
        joint_sum += step.joint_loss;
        for (size_t t = 0; t < num_tasks; ++t) loss_sums[t] += step.task_loss[t];
        if (train_cfg.trace_steps)
          result.step_trace.push_back(make_trace_row(epoch, static_cast<int>(bi) + 1,
                                                     step.joint_loss, step.task_loss,
                                                     result.params.log_var));
      } catch (const std::exception& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(bi + 1) + ": " + e.what());
      }
    }

    const double inv_batches = 1.0 / static_cast<double>(batches.size());
    std::vector<double> epoch_losses(num_tasks);
    for (size_t t = 0; t < num_tasks; ++t) epoch_losses[t] = loss_sums[t] * inv_batches;
    result.trace.push_back(make_trace_row(epoch, 0, joint_sum * inv_batches,
                                          std::move(epoch_losses), result.params.log_var));
  }

  return result;
}

std::vector<std::vector<int>> predict(const ModelParams& params, const std::vector<TaskSpec>& tasks,
                                      const Matrix& features) {
  if (params.heads.size() != tasks.size())
    throw std::invalid_argument("predict: params and task specs disagree on task count");
  const auto logits = forward(params, features);
  std::vector<std::vector<int>> preds(tasks.size());
  for (size_t t = 0; t < tasks.size(); ++t) {
    const Matrix& z = logits[t];
    preds[t].reserve(z.rows());
    for (int i = 0; i < z.rows(); ++i) {
      if (tasks[t].kind == TaskKind::nominal) {
        const double* row = z.row(i);
        int best = 0;
        for (int c = 1; c < z.cols(); ++c)
          if (row[c] > row[best]) best = c;  // lowest index wins ties
        preds[t].push_back(best);
      } else {
        preds[t].push_back(ordinal_decode(std::span(z.row(i), static_cast<size_t>(z.cols()))));
      }
    }
  }
  return preds;
}

MetricsReport evaluate(const ModelParams& params, const std::vector<TaskSpec>& tasks,
                       const Dataset& ds) {
  const auto preds = predict(params, tasks, ds.features);
  MetricsReport report;
  report.samples = ds.size();
  for (size_t t = 0; t < tasks.size(); ++t)
    report.tasks.push_back(task_metrics(ds.tasks[t], preds[t], ds.labels[t]));
  return report;
}

ModeRun run_mode(const NetConfig& net_cfg, const TrainConfig& train_cfg, const Dataset& train_ds,
                 const Dataset& test_ds) {
  ModeRun run;
  run.mode = train_cfg.mode;
  run.seed = train_cfg.seed;

  if (train_cfg.mode == TrainMode::no_ordinal_opt) {
    run.net_cfg = flatten_ordinal(net_cfg);
    TrainResult res = train(run.net_cfg, train_cfg, flatten_ordinal(train_ds));
    run.params = std::move(res.params);
    run.trace = std::move(res.trace);
    run.step_trace = std::move(res.step_trace);
    auto preds = predict(run.params, run.net_cfg.tasks, test_ds.features);
    // back to rank space where the original task was ordinal
    for (size_t t = 0; t < net_cfg.tasks.size(); ++t)
      if (net_cfg.tasks[t].kind == TaskKind::ordinal)
        for (int& p : preds[t]) ++p;
    run.test_report.samples = test_ds.size();
    for (size_t t = 0; t < net_cfg.tasks.size(); ++t)
      run.test_report.tasks.push_back(task_metrics(test_ds.tasks[t], preds[t], test_ds.labels[t]));
  } else {
    run.net_cfg = net_cfg;
    TrainResult res = train(net_cfg, train_cfg, train_ds);
    run.params = std::move(res.params);
    run.trace = std::move(res.trace);
    run.step_trace = std::move(res.step_trace);
    run.test_report = evaluate(run.params, net_cfg.tasks, test_ds);
  }
  return run;
}

std::vector<ModeRun> ablation_run(const NetConfig& net_cfg, const TrainConfig& train_cfg,
                                  const Dataset& train_ds, const Dataset& test_ds) {
  std::vector<ModeRun> runs;
  for (TrainMode mode : {TrainMode::full, TrainMode::no_uncertainty, TrainMode::no_ordinal_opt}) {
    TrainConfig arm = train_cfg;
    arm.mode = mode;
    if (mode == TrainMode::no_uncertainty)
      arm.fixed_beta.assign(net_cfg.tasks.size(), 1.0 / static_cast<double>(net_cfg.tasks.size()));
    else
      arm.fixed_beta.clear();
    runs.push_back(run_mode(net_cfg, arm, train_ds, test_ds));
  }
  return runs;
}

}  // namespace mtl
