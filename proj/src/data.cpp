#include "mtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "mtl/format.hpp"
#include "mtl/rng.hpp"

namespace mtl {

namespace {

// Acklam's rational approximation of the standard normal quantile
// (|relative error| < 1.15e-9), sharpened with one Halley step.
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p not in (0,1)");
  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01, -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

[[noreturn]] void line_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void Dataset::validate() const {
  const int n = size();
  if (labels.size() != tasks.size())
    throw std::invalid_argument("dataset: " + std::to_string(labels.size()) +
                                " label columns for " + std::to_string(tasks.size()) + " tasks");
  for (size_t t = 0; t < tasks.size(); ++t) {
    tasks[t].validate();
    if (static_cast<int>(labels[t].size()) != n)
      throw std::invalid_argument("dataset: task '" + tasks[t].name + "' has " +
                                  std::to_string(labels[t].size()) + " labels for " +
                                  std::to_string(n) + " rows");
    for (int i = 0; i < n; ++i) {
      const int y = labels[t][i];
      const bool ok = tasks[t].kind == TaskKind::nominal ? (y >= 0 && y < tasks[t].levels)
                                                         : (y >= 1 && y <= tasks[t].levels);
      if (!ok)
        throw std::invalid_argument("dataset: task '" + tasks[t].name + "' label " +
                                    std::to_string(y) + " out of range at row " +
                                    std::to_string(i));
    }
  }
}

void GenConfig::validate() const {
  if (n < 1) throw std::invalid_argument("gen config: n must be >= 1");
  if (latent_dim < 1) throw std::invalid_argument("gen config: latent_dim must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("gen config: feature_dim must be >= 1");
  if (tasks.empty()) throw std::invalid_argument("gen config: tasks must be non-empty");
  std::unordered_set<std::string> names;
  for (const auto& t : tasks) {
    t.validate();
    if (!names.insert(t.name).second)
      throw std::invalid_argument("gen config: duplicate task name '" + t.name + "'");
  }
  if (!label_noise.empty() && label_noise.size() != tasks.size())
    throw std::invalid_argument("gen config: label_noise needs one entry per task");
  for (double p : label_noise)
    if (!(p >= 0.0 && p < 0.5))
      throw std::invalid_argument("gen config: label_noise must be in [0, 0.5)");
}

Dataset generate(const GenConfig& cfg) {
  cfg.validate();
  const size_t num_tasks = cfg.tasks.size();
  std::vector<double> noise = cfg.label_noise;
  if (noise.empty()) noise.assign(num_tasks, 0.0);

  Rng rng(cfg.seed);

  // Fixed mixing matrix for features: feature_dim x latent_dim.
  Matrix mix(cfg.feature_dim, cfg.latent_dim);
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  for (double& v : mix.data()) v = rng.normal() * mix_scale;

  // Per-task label maps over the shared latent: nominal tasks score each
  // class with a random linear map, ordinal tasks project onto a unit
  // direction and cut at standard-normal quantiles (equal-probability bins).
  std::vector<Matrix> class_maps(num_tasks);
  std::vector<std::vector<double>> directions(num_tasks);
  std::vector<std::vector<double>> bin_edges(num_tasks);
  for (size_t t = 0; t < num_tasks; ++t) {
    const TaskSpec& spec = cfg.tasks[t];
    if (spec.kind == TaskKind::nominal) {
      class_maps[t] = Matrix(spec.levels, cfg.latent_dim);
      for (double& v : class_maps[t].data()) v = rng.normal();
    } else {
      auto& dir = directions[t];
      dir.resize(cfg.latent_dim);
      double norm_sq = 0.0;
      for (double& v : dir) {
        v = rng.normal();
        norm_sq += v * v;
      }
      const double inv_norm = 1.0 / std::sqrt(norm_sq);
      for (double& v : dir) v *= inv_norm;
      auto& edges = bin_edges[t];
      for (int k = 1; k < spec.levels; ++k)
        edges.push_back(inverse_normal_cdf(static_cast<double>(k) / spec.levels));
    }
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.tasks = cfg.tasks;
  ds.features = Matrix(cfg.n, cfg.feature_dim);
  ds.labels.assign(num_tasks, std::vector<int>(cfg.n, 0));

  std::vector<double> z(cfg.latent_dim);
  for (int i = 0; i < cfg.n; ++i) {
    for (double& v : z) v = rng.normal();
    for (size_t t = 0; t < num_tasks; ++t) {
      const TaskSpec& spec = cfg.tasks[t];
      if (spec.kind == TaskKind::nominal) {
        int best = 0;
        double best_score = 0.0;
        for (int c = 0; c < spec.levels; ++c) {
          double score = 0.0;
          const double* row = class_maps[t].row(c);
          for (int j = 0; j < cfg.latent_dim; ++j) score += row[j] * z[j];
          if (c == 0 || score > best_score) {
            best = c;
            best_score = score;
          }
        }
        ds.labels[t][i] = best;
      } else {
        double score = 0.0;
        for (int j = 0; j < cfg.latent_dim; ++j) score += directions[t][j] * z[j];
        int rank = 1;
        for (double edge : bin_edges[t])
          if (score > edge) ++rank;
        ds.labels[t][i] = rank;
      }
    }
    double* row = ds.features.row(i);
    for (int d = 0; d < cfg.feature_dim; ++d) {
      double v = 0.0;
      const double* mrow = mix.row(d);
      for (int j = 0; j < cfg.latent_dim; ++j) v += mrow[j] * z[j];
      row[d] = std::tanh(v) + 0.1 * rng.normal();
    }
  }

  // Noise pass, after all clean draws so that clean labels are identical
  // across noise settings for the same seed.
  for (size_t t = 0; t < num_tasks; ++t) {
    if (noise[t] == 0.0) continue;
    const TaskSpec& spec = cfg.tasks[t];
    for (int i = 0; i < cfg.n; ++i) {
      if (rng.uniform() >= noise[t]) continue;
      int& y = ds.labels[t][i];
      if (spec.kind == TaskKind::nominal) {
        // uniform over the other classes
        int other = static_cast<int>(rng.below(static_cast<uint64_t>(spec.levels - 1)));
        if (other >= y) ++other;
        y = other;
      } else {
        // +-1 rank jitter; at the ends only the in-range direction exists,
        // so every noise event actually changes the label
        int delta = rng.uniform() < 0.5 ? -1 : 1;
        if (y == 1) delta = 1;
        if (y == spec.levels) delta = -1;
        y += delta;
      }
    }
  }

  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

  std::string header;
  for (int d = 0; d < ds.features.cols(); ++d) {
    if (d) header += ',';
    header += "feat_" + std::to_string(d);
  }
  for (const auto& t : ds.tasks) header += ",task:" + t.name;
  out << header << '\n';

  for (int i = 0; i < ds.size(); ++i) {
    std::string line;
    const double* row = ds.features.row(i);
    for (int d = 0; d < ds.features.cols(); ++d) {
      if (d) line += ',';
      line += fmt_g(row[d], 9);
    }
    for (const auto& col : ds.labels) line += ',' + std::to_string(col[i]);
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset load_csv(const std::string& path, const std::vector<TaskSpec>& tasks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header) || header.empty()) line_error(path, 1, "malformed header");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const auto fields = split_fields(header);
  size_t d = 0;
  while (d < fields.size() && fields[d] == "feat_" + std::to_string(d)) ++d;
  if (d == 0) line_error(path, 1, "malformed header: expected feat_0 first");
  if (fields.size() - d != tasks.size())
    line_error(path, 1, "header has " + std::to_string(fields.size() - d) +
                            " task columns, expected " + std::to_string(tasks.size()));
  for (size_t t = 0; t < tasks.size(); ++t)
    if (fields[d + t] != "task:" + tasks[t].name)
      line_error(path, 1, "header column '" + fields[d + t] + "' does not match task '" +
                              tasks[t].name + "'");

  const int feature_dim = static_cast<int>(d);
  std::vector<double> feature_rows;
  std::vector<std::vector<int>> labels(tasks.size());

  std::string line;
  int line_no = 1;
  int n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto row = split_fields(line);
    if (row.size() != d + tasks.size())
      line_error(path, line_no, "expected " + std::to_string(d + tasks.size()) +
                                    " columns, got " + std::to_string(row.size()));
    for (int j = 0; j < feature_dim; ++j) {
      size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(row[j], &pos);
      } catch (const std::exception&) {
        line_error(path, line_no, "bad feature value '" + row[j] + "'");
      }
      if (pos != row[j].size() || !std::isfinite(v))
        line_error(path, line_no, "bad feature value '" + row[j] + "'");
      feature_rows.push_back(v);
    }
    for (size_t t = 0; t < tasks.size(); ++t) {
      const std::string& field = row[d + t];
      size_t pos = 0;
      int y = 0;
      try {
        y = std::stoi(field, &pos);
      } catch (const std::exception&) {
        line_error(path, line_no, "bad label '" + field + "' for task '" + tasks[t].name + "'");
      }
      if (pos != field.size())
        line_error(path, line_no, "bad label '" + field + "' for task '" + tasks[t].name + "'");
      const bool ok = tasks[t].kind == TaskKind::nominal ? (y >= 0 && y < tasks[t].levels)
                                                         : (y >= 1 && y <= tasks[t].levels);
      if (!ok)
        line_error(path, line_no, "label " + std::to_string(y) + " out of range for task '" +
                                      tasks[t].name + "'");
      labels[t].push_back(y);
    }
    ++n;
  }
  if (n == 0) line_error(path, line_no, "no data rows");

  Dataset ds;
  ds.name = path;
  ds.tasks = tasks;
  ds.features = Matrix(n, feature_dim);
  std::copy(feature_rows.begin(), feature_rows.end(), ds.features.data().begin());
  ds.labels = std::move(labels);
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split: test_fraction must be in (0, 1)");
  const int n = ds.size();
  const int test_n = static_cast<int>(std::lround(n * test_fraction));
  if (test_n <= 0 || test_n >= n)
    throw std::invalid_argument("split: test_fraction " + std::to_string(test_fraction) +
                                " produces an empty part for n=" + std::to_string(n));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&ds](std::span<const int> idx, const std::string& suffix) {
    Dataset part;
    part.name = ds.name + suffix;
    part.tasks = ds.tasks;
    part.features = Matrix(static_cast<int>(idx.size()), ds.features.cols());
    part.labels.assign(ds.tasks.size(), {});
    for (auto& col : part.labels) col.reserve(idx.size());
    for (size_t r = 0; r < idx.size(); ++r) {
      const double* src = ds.features.row(idx[r]);
      std::copy(src, src + ds.features.cols(), part.features.row(static_cast<int>(r)));
      for (size_t t = 0; t < ds.tasks.size(); ++t) part.labels[t].push_back(ds.labels[t][idx[r]]);
    }
    return part;
  };

  std::span<const int> all(order);
  return {take(all.subspan(test_n), "/train"), take(all.first(test_n), "/test")};
}

}  // namespace mtl
