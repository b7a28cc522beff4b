#include "mtl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mtl {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

[[noreturn]] void key_error(const std::string& key, int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ", key '" + key + "': " + what);
}

int64_t parse_i64(const std::string& key, int line, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    key_error(key, line, "expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, int line, const std::string& v) {
  try {
    size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("");
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    key_error(key, line, "expected an unsigned integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, int line, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    key_error(key, line, "expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, int line, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  key_error(key, line, "expected true or false, got '" + v + "'");
}

int parse_pos_int(const std::string& key, int line, const std::string& v) {
  const int64_t x = parse_i64(key, line, v);
  if (x < 1 || x > 1'000'000'000) key_error(key, line, "must be a positive integer");
  return static_cast<int>(x);
}

std::vector<TaskSpec> parse_tasks(const std::string& key, int line, const std::string& v) {
  std::vector<TaskSpec> tasks;
  for (const auto& item : split_list(v)) {
    const size_t c1 = item.find(':');
    const size_t c2 = item.rfind(':');
    if (c1 == std::string::npos || c2 == c1)
      key_error(key, line, "expected name:kind:levels, got '" + item + "'");
    TaskSpec spec;
    spec.name = item.substr(0, c1);
    try {
      spec.kind = task_kind_from_string(item.substr(c1 + 1, c2 - c1 - 1));
      spec.levels = parse_pos_int(key, line, item.substr(c2 + 1));
      spec.validate();
    } catch (const std::invalid_argument& e) {
      key_error(key, line, e.what());
    }
    tasks.push_back(spec);
  }
  if (tasks.empty()) key_error(key, line, "needs at least one task");
  return tasks;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value, got '" +
                        line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (value.empty()) key_error(key, line_no, "empty value");

    if (key == "seed") {
      cfg.seed = parse_u64(key, line_no, value);
    } else if (key == "tasks") {
      cfg.tasks = parse_tasks(key, line_no, value);
    } else if (key == "input_dim") {
      cfg.input_dim = parse_pos_int(key, line_no, value);
    } else if (key == "trunk_layers") {
      cfg.trunk_layers.clear();
      for (const auto& item : split_list(value))
        cfg.trunk_layers.push_back(parse_pos_int(key, line_no, item));
      if (cfg.trunk_layers.empty()) key_error(key, line_no, "needs at least one width");
    } else if (key == "epochs") {
      const int64_t e = parse_i64(key, line_no, value);
      if (e < 0 || e > 1'000'000) key_error(key, line_no, "must be >= 0");
      cfg.epochs = static_cast<int>(e);
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_real(key, line_no, value);
      if (!(cfg.learning_rate > 0.0)) key_error(key, line_no, "must be > 0");
    } else if (key == "weight_decay") {
      cfg.weight_decay = parse_real(key, line_no, value);
      if (cfg.weight_decay < 0.0) key_error(key, line_no, "must be >= 0");
    } else if (key == "batch_size") {
      cfg.batch_size = parse_pos_int(key, line_no, value);
    } else if (key == "momentum") {
      cfg.momentum = parse_real(key, line_no, value);
      if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) key_error(key, line_no, "must be in [0, 1)");
    } else if (key == "mode") {
      try {
        cfg.mode = train_mode_from_string(value);
      } catch (const std::invalid_argument& e) {
        key_error(key, line_no, e.what());
      }
    } else if (key == "fixed_beta") {
      cfg.fixed_beta.clear();
      for (const auto& item : split_list(value)) {
        const double b = parse_real(key, line_no, item);
        if (!(b > 0.0)) key_error(key, line_no, "weights must be > 0");
        cfg.fixed_beta.push_back(b);
      }
    } else if (key == "test_fraction") {
      cfg.test_fraction = parse_real(key, line_no, value);
      if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        key_error(key, line_no, "must be in (0, 1)");
    } else if (key == "trace_steps") {
      cfg.trace_steps = parse_bool(key, line_no, value);
    } else if (key == "n") {
      cfg.n = parse_pos_int(key, line_no, value);
    } else if (key == "latent_dim") {
      cfg.latent_dim = parse_pos_int(key, line_no, value);
    } else if (key == "feature_dim") {
      cfg.feature_dim = parse_pos_int(key, line_no, value);
    } else if (key == "label_noise") {
      cfg.label_noise.clear();
      for (const auto& item : split_list(value)) {
        const double p = parse_real(key, line_no, item);
        if (!(p >= 0.0 && p < 0.5)) key_error(key, line_no, "noise must be in [0, 0.5)");
        cfg.label_noise.push_back(p);
      }
    } else if (key == "ablation_seeds") {
      cfg.ablation_seeds.clear();
      for (const auto& item : split_list(value))
        cfg.ablation_seeds.push_back(parse_u64(key, line_no, item));
      if (cfg.ablation_seeds.empty()) key_error(key, line_no, "needs at least one seed");
    } else if (key == "eval_split") {
      if (value == "full") cfg.eval_split = EvalSplit::full;
      else if (value == "train") cfg.eval_split = EvalSplit::train;
      else if (value == "test") cfg.eval_split = EvalSplit::test;
      else key_error(key, line_no, "expected full, train, or test");
    } else if (key == "data_in") {
      cfg.data_in = value;
    } else if (key == "data_out") {
      cfg.data_out = value;
    } else if (key == "trace_out") {
      cfg.trace_out = value;
    } else if (key == "steps_trace_out") {
      cfg.steps_trace_out = value;
    } else if (key == "report_out") {
      cfg.report_out = value;
    } else if (key == "model_in") {
      cfg.model_in = value;
    } else if (key == "model_out") {
      cfg.model_out = value;
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  if (!cfg.label_noise.empty() && !cfg.tasks.empty() &&
      cfg.label_noise.size() != cfg.tasks.size())
    throw ConfigError("config: label_noise has " + std::to_string(cfg.label_noise.size()) +
                      " entries for " + std::to_string(cfg.tasks.size()) + " tasks");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace mtl
