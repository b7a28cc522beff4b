#include "mtl/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "mtl/config.hpp"
#include "mtl/data.hpp"
#include "mtl/format.hpp"
#include "mtl/model_io.hpp"
#include "mtl/trainer.hpp"

namespace mtl {

namespace {

namespace fs = std::filesystem;

// Tracks files written by one command and removes them if it fails.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (!armed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  void track(const std::string& path) { paths_.push_back(path); }
  void disarm() { armed_ = false; }

 private:
  std::vector<std::string> paths_;
  bool armed_ = true;
};

std::string resolve_out(const std::string& out_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || out_dir.empty()) return path;
  return (fs::path(out_dir) / p).string();
}

void write_text(const std::string& path, const std::string& content, OutputGuard& guard) {
  guard.track(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string trace_csv(const std::vector<EpochTrace>& rows, const std::vector<TaskSpec>& tasks,
                      bool with_step) {
  std::string text = "epoch";
  if (with_step) text += ",step";
  text += ",joint_loss";
  for (const auto& t : tasks)
    text += "," + t.name + "_loss," + t.name + "_log_var," + t.name + "_sigma_sq," + t.name +
            "_beta";
  text += '\n';
  for (const auto& row : rows) {
    text += std::to_string(row.epoch);
    if (with_step) text += ',' + std::to_string(row.step);
    text += ',' + fmt_g(row.joint_loss, 12);
    for (size_t t = 0; t < tasks.size(); ++t)
      text += ',' + fmt_g(row.task_loss[t], 12) + ',' + fmt_g(row.log_var[t], 12) + ',' +
              fmt_g(row.sigma_sq[t], 12) + ',' + fmt_g(row.beta[t], 12);
    text += '\n';
  }
  return text;
}

std::string report_text(const MetricsReport& report) {
  std::string text = "samples = " + std::to_string(report.samples) + '\n';
  for (const auto& tm : report.tasks) {
    const std::string p = "task." + tm.task + ".";
    text += p + "kind = " + to_string(tm.kind) + '\n';
    text += p + "levels = " + std::to_string(tm.levels) + '\n';
    text += p + "accuracy = " + fmt_g(tm.accuracy, 12) + '\n';
    if (tm.kind == TaskKind::ordinal) {
      text += p + "mae = " + fmt_g(tm.mae, 12) + '\n';
      text += p + "mse = " + fmt_g(tm.mse, 12) + '\n';
      std::string cs;
      for (size_t i = 0; i < tm.cs.size(); ++i) cs += (i ? "," : "") + fmt_g(tm.cs[i], 12);
      text += p + "cs = " + cs + '\n';
    }
    for (size_t r = 0; r < tm.confusion.size(); ++r) {
      std::string row;
      for (size_t c = 0; c < tm.confusion[r].size(); ++c)
        row += (c ? "," : "") + std::to_string(tm.confusion[r][c]);
      text += p + "confusion_row_" + std::to_string(r) + " = " + row + '\n';
    }
  }
  return text;
}

NetConfig net_config_from(const RunConfig& cfg) {
  NetConfig net;
  net.input_dim = cfg.input_dim;
  net.trunk_layers = cfg.trunk_layers;
  net.tasks = cfg.tasks;
  net.seed = cfg.seed;
  return net;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.weight_decay = cfg.weight_decay;
  tc.batch_size = cfg.batch_size;
  tc.momentum = cfg.momentum;
  tc.seed = cfg.seed;
  tc.mode = cfg.mode;
  tc.fixed_beta = cfg.fixed_beta;
  tc.trace_steps = cfg.trace_steps;
  return tc;
}

void require_tasks(const RunConfig& cfg) {
  if (cfg.tasks.empty()) throw ConfigError("config: 'tasks' is required for this command");
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
  require_tasks(cfg);
  GenConfig gen;
  gen.n = cfg.n;
  gen.latent_dim = cfg.latent_dim;
  gen.feature_dim = cfg.feature_dim;
  gen.tasks = cfg.tasks;
  gen.label_noise = cfg.label_noise;
  gen.seed = cfg.seed;
  try {
    gen.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Dataset ds = generate(gen);
  OutputGuard guard;
  const std::string path = resolve_out(out_dir, cfg.data_out);
  guard.track(path);
  save_csv(ds, path);
  guard.disarm();

  std::cout << "wrote " << path << '\n';
  std::cout << "n = " << ds.size() << '\n';
  std::cout << "feature_dim = " << ds.features.cols() << '\n';
  for (size_t t = 0; t < ds.tasks.size(); ++t) {
    const TaskSpec& spec = ds.tasks[t];
    std::map<int, int> hist;
    for (int y : ds.labels[t]) ++hist[y];
    std::cout << "task " << spec.name << " (" << to_string(spec.kind) << ", " << spec.levels
              << " levels):";
    for (const auto& [label, count] : hist) std::cout << ' ' << label << ':' << count;
    std::cout << '\n';
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  require_tasks(cfg);
  const NetConfig net = net_config_from(cfg);
  TrainConfig tc = train_config_from(cfg);
  try {
    net.validate();
    tc.validate(net.tasks.size());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Dataset ds = load_csv(cfg.data_in, cfg.tasks);
  const auto [train_ds, test_ds] = split(ds, cfg.test_fraction, cfg.seed);
  const ModeRun run = run_mode(net, tc, train_ds, test_ds);

  OutputGuard guard;
  const std::string model_path = resolve_out(out_dir, cfg.model_out);
  guard.track(model_path);
  save_model(model_path, run.net_cfg, run.params);
  write_text(resolve_out(out_dir, cfg.trace_out), trace_csv(run.trace, net.tasks, false), guard);
  if (cfg.trace_steps)
    write_text(resolve_out(out_dir, cfg.steps_trace_out), trace_csv(run.step_trace, net.tasks, true),
               guard);
  write_text(resolve_out(out_dir, cfg.report_out), report_text(run.test_report), guard);
  guard.disarm();

  std::cout << "trained " << to_string(tc.mode) << " for " << tc.epochs << " epochs on "
            << train_ds.size() << " samples, evaluated on " << test_ds.size() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& out_dir) {
  const SavedModel model = load_model(cfg.model_in);
  const Dataset ds = load_csv(cfg.data_in, model.net_cfg.tasks);
  if (ds.features.cols() != model.net_cfg.input_dim)
    throw std::runtime_error("eval: dataset feature width " + std::to_string(ds.features.cols()) +
                             " but model expects " + std::to_string(model.net_cfg.input_dim));

  const Dataset* eval_ds = &ds;
  Dataset train_part, test_part;
  if (cfg.eval_split != EvalSplit::full) {
    std::tie(train_part, test_part) = split(ds, cfg.test_fraction, cfg.seed);
    eval_ds = cfg.eval_split == EvalSplit::train ? &train_part : &test_part;
  }

  const MetricsReport report = evaluate(model.params, model.net_cfg.tasks, *eval_ds);
  OutputGuard guard;
  write_text(resolve_out(out_dir, cfg.report_out), report_text(report), guard);
  guard.disarm();

  std::cout << "evaluated " << eval_ds->size() << " samples\n";
  return 0;
}

int cmd_ablation(const RunConfig& cfg, const std::string& out_dir) {
  require_tasks(cfg);
  bool has_ordinal = false, has_nominal = false;
  for (const auto& t : cfg.tasks) (t.kind == TaskKind::ordinal ? has_ordinal : has_nominal) = true;
  if (!has_ordinal || !has_nominal)
    throw ConfigError("config: ablation needs at least one ordinal and one nominal task");

  const Dataset ds = load_csv(cfg.data_in, cfg.tasks);

  struct Row {
    std::string mode;
    uint64_t seed;
    MetricsReport report;
  };
  std::vector<Row> rows;
  for (uint64_t seed : cfg.ablation_seeds) {
    RunConfig arm_cfg = cfg;
    arm_cfg.seed = seed;
    const NetConfig net = net_config_from(arm_cfg);
    TrainConfig tc = train_config_from(arm_cfg);
    tc.mode = TrainMode::full;  // ablation_run sets each arm's mode
    tc.fixed_beta.clear();
    const auto [train_ds, test_ds] = split(ds, cfg.test_fraction, seed);
    for (const ModeRun& run : ablation_run(net, tc, train_ds, test_ds))
      rows.push_back({to_string(run.mode), run.seed, run.test_report});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.mode != b.mode ? a.mode < b.mode : a.seed < b.seed;
  });

  // metric columns: per task accuracy, plus mae/mse for ordinal tasks
  auto row_values = [&](const MetricsReport& report) {
    std::vector<double> vals;
    for (const auto& tm : report.tasks) {
      vals.push_back(tm.accuracy);
      if (tm.kind == TaskKind::ordinal) {
        vals.push_back(tm.mae);
        vals.push_back(tm.mse);
      }
    }
    return vals;
  };

  std::string text = "mode,seed";
  for (const auto& t : cfg.tasks) {
    text += ',' + t.name + "_accuracy";
    if (t.kind == TaskKind::ordinal) text += ',' + t.name + "_mae," + t.name + "_mse";
  }
  text += '\n';
  for (const auto& row : rows) {
    text += row.mode + ',' + std::to_string(row.seed);
    for (double v : row_values(row.report)) text += ',' + fmt_g(v, 17);
    text += '\n';
  }
  // per-mode means over the seed rows, same column layout
  std::vector<std::string> mode_order;
  for (const auto& row : rows)
    if (std::find(mode_order.begin(), mode_order.end(), row.mode) == mode_order.end())
      mode_order.push_back(row.mode);
  for (const auto& mode : mode_order) {
    std::vector<double> sums;
    int count = 0;
    for (const auto& row : rows) {
      if (row.mode != mode) continue;
      const auto vals = row_values(row.report);
      if (sums.empty()) sums.assign(vals.size(), 0.0);
      for (size_t i = 0; i < vals.size(); ++i) sums[i] += vals[i];
      ++count;
    }
    text += mode + ",mean";
    for (double s : sums) text += ',' + fmt_g(s / count, 17);
    text += '\n';
  }

  OutputGuard guard;
  write_text(resolve_out(out_dir, cfg.report_out), text, guard);
  guard.disarm();

  std::cout << "ablation over " << cfg.ablation_seeds.size() << " seeds written\n";
  return 0;
}

void usage(std::ostream& out) {
  out << "usage: mtl <gen-data|train|eval|ablation> --config <path> [--seed <u64>] "
         "[--out-dir <path>]\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::string command, config_path, out_dir;
  bool seed_override = false;
  uint64_t seed = 0;

  try {
    if (args.empty()) throw ConfigError("missing command");
    command = args[0];
    if (command == "help" || command == "--help" || command == "-h") {
      usage(std::cout);
      return 0;
    }
    for (size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      auto next = [&]() -> const std::string& {
        if (i + 1 >= args.size()) throw ConfigError("flag " + a + " needs a value");
        return args[++i];
      };
      if (a == "--config") config_path = next();
      else if (a == "--out-dir") out_dir = next();
      else if (a == "--seed") {
        const std::string& v = next();
        try {
          size_t pos = 0;
          seed = std::stoull(v, &pos);
          if (pos != v.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
          throw ConfigError("--seed: expected an unsigned integer, got '" + v + "'");
        }
        seed_override = true;
      } else {
        throw ConfigError("unknown flag '" + a + "'");
      }
    }
    if (config_path.empty()) throw ConfigError("--config is required");

    RunConfig cfg = parse_config_file(config_path);
    if (seed_override) cfg.seed = seed;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    if (command == "gen-data") return cmd_gen_data(cfg, out_dir);
    if (command == "train") return cmd_train(cfg, out_dir);
    if (command == "eval") return cmd_eval(cfg, out_dir);
    if (command == "ablation") return cmd_ablation(cfg, out_dir);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    usage(std::cerr);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mtl
