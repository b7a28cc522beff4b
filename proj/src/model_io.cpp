#include "mtl/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mtl/format.hpp"

namespace mtl {

namespace {

constexpr const char* kMagic = "mtl-model v1";

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    std::string line;
    for (int j = 0; j < m.cols(); ++j) {
      if (j) line += ' ';
      line += fmt_g(row[j], 17);
    }
    out << line << '\n';
  }
}

Matrix row_vector(const std::vector<double>& v) {
  Matrix m(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw std::runtime_error("model file '" + path + "': " + what);
}

Matrix read_tensor(std::istream& in, const std::string& path, const std::string& want) {
  std::string line;
  if (!std::getline(in, line)) bad(path, "truncated before param '" + want + "'");
  std::istringstream head(line);
  std::string tag, name;
  int rows = 0, cols = 0;
  if (!(head >> tag >> name >> rows >> cols) || tag != "param" || name != want || rows < 1 ||
      cols < 1)
    bad(path, "expected 'param " + want + " <rows> <cols>', got '" + line + "'");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) bad(path, "truncated inside param '" + want + "'");
    std::istringstream vals(line);
    for (int j = 0; j < cols; ++j)
      if (!(vals >> m(i, j))) bad(path, "bad value in param '" + want + "' row " + std::to_string(i));
  }
  return m;
}

}  // namespace

void save_model(const std::string& path, const NetConfig& cfg, const ModelParams& params) {
  cfg.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

  out << kMagic << '\n';
  out << "input_dim " << cfg.input_dim << '\n';
  out << "trunk_layers";
  for (size_t i = 0; i < cfg.trunk_layers.size(); ++i)
    out << (i ? ',' : ' ') << cfg.trunk_layers[i];
  out << '\n';
  out << "tasks";
  for (size_t i = 0; i < cfg.tasks.size(); ++i)
    out << (i ? ',' : ' ') << cfg.tasks[i].name << ':' << to_string(cfg.tasks[i].kind) << ':'
        << cfg.tasks[i].levels;
  out << '\n';
  out << "seed " << cfg.seed << '\n';

  for (size_t l = 0; l < params.trunk.size(); ++l) {
    write_tensor(out, "trunk." + std::to_string(l) + ".w", params.trunk[l].w);
    write_tensor(out, "trunk." + std::to_string(l) + ".b", row_vector(params.trunk[l].b));
  }
  for (size_t t = 0; t < params.heads.size(); ++t) {
    write_tensor(out, "head." + std::to_string(t) + ".w", params.heads[t].w);
    write_tensor(out, "head." + std::to_string(t) + ".b", row_vector(params.heads[t].b));
  }
  write_tensor(out, "log_var", row_vector(params.log_var));
  out << "end\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) bad(path, "empty file, missing version header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMagic)
    bad(path, "bad version header '" + line + "' (expected '" + std::string(kMagic) + "')");

  SavedModel model;
  auto expect_key = [&](const char* key) {
    if (!std::getline(in, line)) bad(path, std::string("truncated before '") + key + "'");
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != key) bad(path, "expected '" + std::string(key) + "', got '" + line + "'");
    std::string rest;
    std::getline(ss, rest);
    while (!rest.empty() && (rest.front() == ' ' || rest.back() == '\r')) {
      if (rest.front() == ' ') rest.erase(rest.begin());
      else rest.pop_back();
    }
    return rest;
  };

  try {
    model.net_cfg.input_dim = std::stoi(expect_key("input_dim"));
    model.net_cfg.trunk_layers.clear();
    std::istringstream widths(expect_key("trunk_layers"));
    std::string item;
    while (std::getline(widths, item, ',')) model.net_cfg.trunk_layers.push_back(std::stoi(item));
    std::istringstream tasks(expect_key("tasks"));
    while (std::getline(tasks, item, ',')) {
      const size_t c1 = item.find(':');
      const size_t c2 = item.rfind(':');
      if (c1 == std::string::npos || c2 == c1) bad(path, "bad task entry '" + item + "'");
      TaskSpec spec;
      spec.name = item.substr(0, c1);
      spec.kind = task_kind_from_string(item.substr(c1 + 1, c2 - c1 - 1));
      spec.levels = std::stoi(item.substr(c2 + 1));
      model.net_cfg.tasks.push_back(spec);
    }
    model.net_cfg.seed = std::stoull(expect_key("seed"));
    model.net_cfg.validate();
  } catch (const std::invalid_argument& e) {
    bad(path, e.what());
  }

  for (size_t l = 0; l < model.net_cfg.trunk_layers.size(); ++l) {
    DenseLayer layer;
    layer.w = read_tensor(in, path, "trunk." + std::to_string(l) + ".w");
    const Matrix b = read_tensor(in, path, "trunk." + std::to_string(l) + ".b");
    layer.b = b.data();
    model.params.trunk.push_back(std::move(layer));
  }
  for (size_t t = 0; t < model.net_cfg.tasks.size(); ++t) {
    DenseLayer layer;
    layer.w = read_tensor(in, path, "head." + std::to_string(t) + ".w");
    const Matrix b = read_tensor(in, path, "head." + std::to_string(t) + ".b");
    layer.b = b.data();
    model.params.heads.push_back(std::move(layer));
  }
  model.params.log_var = read_tensor(in, path, "log_var").data();

  if (!std::getline(in, line) || (line != "end" && line != "end\r"))
    bad(path, "missing end marker");

  // shape self-check against the embedded config
  const ModelParams reference = init_params(model.net_cfg);
  if (!same_shape(reference, model.params)) bad(path, "parameter shapes do not match config");
  if (!all_finite(model.params)) bad(path, "non-finite parameter");
  return model;
}

}  // namespace mtl
