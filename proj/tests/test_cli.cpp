#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mtl/cli.hpp"
#include "mtl/config.hpp"
#include "mtl/data.hpp"
#include "mtl/model_io.hpp"

using namespace mtl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mtl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

std::string base_config(int epochs = 3, int n = 300) {
  std::ostringstream cfg;
  cfg << "tasks = age:ordinal:5,group:nominal:3\n"
      << "n = " << n << "\n"
      << "latent_dim = 4\n"
      << "feature_dim = 8\n"
      << "input_dim = 8\n"
      << "trunk_layers = 16\n"
      << "label_noise = 0.1,0.1\n"
      << "epochs = " << epochs << "\n"
      << "seed = 7\n"
      << "test_fraction = 0.25\n";
  return cfg.str();
}

double parsed_report_value(const std::string& report, const std::string& key) {
  for (const auto& line : lines_of(report)) {
    const size_t eq = line.find(" = ");
    if (eq != std::string::npos && line.substr(0, eq) == key)
      return std::stod(line.substr(eq + 3));
  }
  FAIL("missing report key ", key);
  return 0.0;
}

}  // namespace

TEST_CASE("config parser applies the stock defaults") {
  const RunConfig cfg = parse_config_text("");
  CHECK(cfg.epochs == 80);
  CHECK(cfg.learning_rate == 0.001);
  CHECK(cfg.weight_decay == 0.0005);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.mode == TrainMode::full);
}

TEST_CASE("config parser reads values, lists, and comments") {
  const RunConfig cfg = parse_config_text(
      "# a comment\n"
      "tasks = age:ordinal:8, group:nominal:4\n"
      "trunk_layers = 32,16\n"
      "label_noise = 0.2,0.0\n"
      "mode = no_uncertainty\n"
      "fixed_beta = 0.5,0.5\n"
      "epochs = 5   # trailing comment\n"
      "seed = 123\n");
  REQUIRE(cfg.tasks.size() == 2);
  CHECK(cfg.tasks[0].name == "age");
  CHECK(cfg.tasks[0].kind == TaskKind::ordinal);
  CHECK(cfg.tasks[0].levels == 8);
  CHECK(cfg.tasks[1].kind == TaskKind::nominal);
  CHECK(cfg.trunk_layers == std::vector<int>{32, 16});
  CHECK(cfg.label_noise == std::vector<double>{0.2, 0.0});
  CHECK(cfg.mode == TrainMode::no_uncertainty);
  CHECK(cfg.epochs == 5);
  CHECK(cfg.seed == 123);
}

TEST_CASE("config parser rejects unknown keys and bad values by name") {
  CHECK_THROWS_WITH_AS(parse_config_text("learning_rat = 0.001\n"),
                       doctest::Contains("unknown key 'learning_rat'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("momentum = 1.5\n"), doctest::Contains("momentum"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs = soon\n"), doctest::Contains("epochs"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("tasks = age:circular:5\n"), doctest::Contains("tasks"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("label_noise = 0.6\n"), doctest::Contains("label_noise"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config_text("just some words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("tasks = a:ordinal:5\nlabel_noise = 0.1,0.1\n"), ConfigError);
}

TEST_CASE("gen-data writes a header plus one line per sample, deterministically") {
  const fs::path dir = fresh_dir("gen");
  write_file(dir / "run.conf", base_config(1, 123));

  const std::vector<std::string> args{"gen-data", "--config", (dir / "run.conf").string(),
                                      "--out-dir", dir.string()};
  CHECK(run_cli(args) == 0);
  const std::string first = read_file(dir / "data.csv");
  CHECK(lines_of(first).size() == 124);

  CHECK(run_cli(args) == 0);
  CHECK(read_file(dir / "data.csv") == first);

  // a different seed changes the bytes
  CHECK(run_cli({"gen-data", "--config", (dir / "run.conf").string(), "--out-dir", dir.string(),
                 "--seed", "8"}) == 0);
  CHECK(read_file(dir / "data.csv") != first);
}

TEST_CASE("unknown config key exits with code 2") {
  const fs::path dir = fresh_dir("badkey");
  write_file(dir / "run.conf", "learning_rat = 0.001\n");
  CHECK(run_cli({"gen-data", "--config", (dir / "run.conf").string()}) == 2);
  CHECK(run_cli({"train", "--config", (dir / "missing.conf").string()}) == 2);
  CHECK(run_cli({"frobnicate", "--config", (dir / "run.conf").string()}) == 2);
  CHECK(run_cli({"train"}) == 2);
}

TEST_CASE("train writes model, trace, and report; trace rows satisfy the simplex") {
  const fs::path dir = fresh_dir("train");
  write_file(dir / "run.conf", base_config(4));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "run.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  write_file(dir / "train.conf", base_config(4) + "data_in = " + (dir / "data.csv").string() + "\n");
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir.string()}) == 0);

  CHECK(fs::exists(dir / "model.txt"));
  CHECK(fs::exists(dir / "report.txt"));
  const auto trace_lines = lines_of(read_file(dir / "trace.csv"));
  REQUIRE(trace_lines.size() == 5);  // header + 4 epochs
  const auto header = split_csv(trace_lines[0]);
  REQUIRE(header.size() == 10);
  CHECK(header[0] == "epoch");
  CHECK(header[1] == "joint_loss");
  CHECK(header[2] == "age_loss");
  CHECK(header[3] == "age_log_var");
  CHECK(header[4] == "age_sigma_sq");
  CHECK(header[5] == "age_beta");
  CHECK(header[6] == "group_loss");
  CHECK(header[9] == "group_beta");
  for (size_t r = 1; r < trace_lines.size(); ++r) {
    const auto row = split_csv(trace_lines[r]);
    REQUIRE(row.size() == 10);
    CHECK(std::stoi(row[0]) == static_cast<int>(r));
    const double beta_sum = std::stod(row[5]) + std::stod(row[9]);
    CHECK(std::abs(beta_sum - 1.0) < 1e-9);
  }
}

TEST_CASE("train with zero epochs leaves an empty trace body") {
  const fs::path dir = fresh_dir("zeroep");
  write_file(dir / "gen.conf", base_config(0, 100));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  write_file(dir / "train.conf", base_config(0, 100) + "data_in = " +
                                     (dir / "data.csv").string() + "\n");
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  CHECK(lines_of(read_file(dir / "trace.csv")).size() == 1);
  CHECK(fs::exists(dir / "report.txt"));  // metrics of the untrained model
}

TEST_CASE("no_uncertainty training reports constant unit sigma^2") {
  const fs::path dir = fresh_dir("nounc");
  write_file(dir / "gen.conf", base_config(3, 200));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  write_file(dir / "train.conf", base_config(3, 200) + "data_in = " +
                                     (dir / "data.csv").string() +
                                     "\nmode = no_uncertainty\nfixed_beta = 0.5,0.5\n");
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  const auto trace_lines = lines_of(read_file(dir / "trace.csv"));
  for (size_t r = 1; r < trace_lines.size(); ++r) {
    const auto row = split_csv(trace_lines[r]);
    CHECK(std::stod(row[4]) == 1.0);
    CHECK(std::stod(row[8]) == 1.0);
  }
}

TEST_CASE("eval on the train command's test split reproduces its report") {
  const fs::path dir = fresh_dir("evalrepro");
  write_file(dir / "gen.conf", base_config(3));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  const std::string shared = base_config(3) + "data_in = " + (dir / "data.csv").string() + "\n";
  write_file(dir / "train.conf", shared);
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  const std::string train_report = read_file(dir / "report.txt");

  write_file(dir / "eval.conf", shared + "model_in = " + (dir / "model.txt").string() +
                                    "\neval_split = test\nreport_out = eval_report.txt\n");
  REQUIRE(run_cli({"eval", "--config", (dir / "eval.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  CHECK(read_file(dir / "eval_report.txt") == train_report);
}

TEST_CASE("eval of a zero-weight model reports the rank-1 predictor error") {
  const fs::path dir = fresh_dir("evalzero");
  const std::string cfg_text =
      "tasks = age:ordinal:5\nn = 500\nlatent_dim = 4\nfeature_dim = 8\ninput_dim = 8\n"
      "trunk_layers = 16\nseed = 3\n";
  write_file(dir / "gen.conf", cfg_text);
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);

  NetConfig net;
  net.input_dim = 8;
  net.trunk_layers = {16};
  net.tasks = {{TaskKind::ordinal, 5, "age"}};
  net.seed = 3;
  ModelParams zero = init_params(net);
  for (auto& layer : zero.trunk) {
    for (double& v : layer.w.data()) v = 0.0;
  }
  for (auto& layer : zero.heads) {
    for (double& v : layer.w.data()) v = 0.0;
  }
  save_model((dir / "zero_model.txt").string(), net, zero);

  write_file(dir / "eval.conf", cfg_text + "data_in = " + (dir / "data.csv").string() +
                                    "\nmodel_in = " + (dir / "zero_model.txt").string() + "\n");
  REQUIRE(run_cli({"eval", "--config", (dir / "eval.conf").string(), "--out-dir",
                   dir.string()}) == 0);

  const Dataset ds = load_csv((dir / "data.csv").string(), net.tasks);
  double expected_mae = 0.0;
  for (int y : ds.labels[0]) expected_mae += std::abs(1 - y);
  expected_mae /= ds.size();

  const std::string report = read_file(dir / "report.txt");
  CHECK(parsed_report_value(report, "task.age.mae") == doctest::Approx(expected_mae).epsilon(1e-9));
}

TEST_CASE("a corrupted model file is rejected via the version header") {
  const fs::path dir = fresh_dir("badmodel");
  write_file(dir / "model.txt", "garbage and not a model\n1 2 3\n");
  CHECK_THROWS_WITH_AS(load_model((dir / "model.txt").string()),
                       doctest::Contains("version header"), std::runtime_error);

  write_file(dir / "gen.conf", base_config(1, 60));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  write_file(dir / "eval.conf", base_config(1, 60) + "data_in = " + (dir / "data.csv").string() +
                                    "\nmodel_in = " + (dir / "model.txt").string() + "\n");
  CHECK(run_cli({"eval", "--config", (dir / "eval.conf").string(), "--out-dir",
                 dir.string()}) == 1);
}

TEST_CASE("model save/load round-trips parameters exactly") {
  const fs::path dir = fresh_dir("modelio");
  NetConfig net;
  net.input_dim = 4;
  net.trunk_layers = {8, 8};
  net.tasks = {{TaskKind::ordinal, 5, "age"}, {TaskKind::nominal, 3, "group"}};
  net.seed = 21;
  ModelParams params = init_params(net);
  params.log_var = {0.123456789012345, -1.5};
  save_model((dir / "m.txt").string(), net, params);
  const SavedModel back = load_model((dir / "m.txt").string());
  CHECK(equal_params(back.params, params));
  CHECK(back.net_cfg.input_dim == 4);
  CHECK(back.net_cfg.trunk_layers == net.trunk_layers);
  CHECK(back.net_cfg.tasks[0].name == "age");
  CHECK(back.net_cfg.tasks[0].kind == TaskKind::ordinal);
  CHECK(back.net_cfg.seed == 21);
}

TEST_CASE("ablation emits one row per mode and seed plus exact mean rows") {
  const fs::path dir = fresh_dir("ablate");
  write_file(dir / "gen.conf", base_config(2, 240));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  write_file(dir / "abl.conf", base_config(2, 240) + "data_in = " + (dir / "data.csv").string() +
                                   "\nablation_seeds = 1,2\nreport_out = ablation.csv\n");
  REQUIRE(run_cli({"ablation", "--config", (dir / "abl.conf").string(), "--out-dir",
                   dir.string()}) == 0);

  const auto lines = lines_of(read_file(dir / "ablation.csv"));
  REQUIRE(lines.size() == 1 + 6 + 3);  // header, 3 modes x 2 seeds, 3 means
  const auto header = split_csv(lines[0]);
  CHECK(header == std::vector<std::string>{"mode", "seed", "age_accuracy", "age_mae", "age_mse",
                                           "group_accuracy"});

  // data rows are sorted by mode then seed
  CHECK(split_csv(lines[1])[0] == "full");
  CHECK(split_csv(lines[1])[1] == "1");
  CHECK(split_csv(lines[2])[1] == "2");
  CHECK(split_csv(lines[3])[0] == "no_ordinal_opt");
  CHECK(split_csv(lines[5])[0] == "no_uncertainty");

  // mean rows equal the arithmetic mean of their mode's rows
  for (int m = 0; m < 3; ++m) {
    const auto mean_row = split_csv(lines[7 + m]);
    CHECK(mean_row[1] == "mean");
    const auto row_a = split_csv(lines[1 + 2 * m]);
    const auto row_b = split_csv(lines[2 + 2 * m]);
    CHECK(mean_row[0] == row_a[0]);
    for (size_t c = 2; c < mean_row.size(); ++c) {
      const double mean = (std::stod(row_a[c]) + std::stod(row_b[c])) / 2.0;
      CHECK(std::abs(std::stod(mean_row[c]) - mean) <= 1e-12);
    }
  }
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  const fs::path dir = fresh_dir("repro");
  write_file(dir / "gen.conf", base_config(2, 150));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  const std::string shared = base_config(2, 150) + "data_in = " + (dir / "data.csv").string() +
                             "\n";
  write_file(dir / "train.conf", shared);
  const fs::path dir_a = dir / "a";
  const fs::path dir_b = dir / "b";
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir_a.string()}) == 0);
  REQUIRE(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                   dir_b.string()}) == 0);
  CHECK(read_file(dir_a / "trace.csv") == read_file(dir_b / "trace.csv"));
  CHECK(read_file(dir_a / "report.txt") == read_file(dir_b / "report.txt"));
  CHECK(read_file(dir_a / "model.txt") == read_file(dir_b / "model.txt"));
}

TEST_CASE("failed commands remove the outputs they had written") {
  const fs::path dir = fresh_dir("partial");
  write_file(dir / "gen.conf", base_config(1, 80));
  REQUIRE(run_cli({"gen-data", "--config", (dir / "gen.conf").string(), "--out-dir",
                   dir.string()}) == 0);
  // report_out points inside a regular file, so the final write must fail
  write_file(dir / "blocker", "plain file\n");
  write_file(dir / "train.conf", base_config(1, 80) + "data_in = " + (dir / "data.csv").string() +
                                     "\nreport_out = blocker/report.txt\n");
  CHECK(run_cli({"train", "--config", (dir / "train.conf").string(), "--out-dir",
                 dir.string()}) == 1);
  CHECK_FALSE(fs::exists(dir / "model.txt"));
  CHECK_FALSE(fs::exists(dir / "trace.csv"));
}
