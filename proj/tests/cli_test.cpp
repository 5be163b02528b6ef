/*
 * Copyright 2026 The pcam Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pcam/model.hpp"
#include "support/synthetic.hpp"

namespace {

std::string cli_path() {
  const char* path = std::getenv("PCAM_CLI");
  REQUIRE_MESSAGE(path != nullptr, "PCAM_CLI must point at the CLI binary");
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_path = "cli_stdout_" + std::to_string(counter) + ".txt";
  const std::string err_path = "cli_stderr_" + std::to_string(counter) + ".txt";
  ++counter;
  const std::string command =
      cli_path() + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return result;
}

// Value of a "key=value" line in the CLI summary.
std::string summary_value(const std::string& output, const std::string& key) {
  std::stringstream ss(output);
  std::string line;
  std::string found;
  while (std::getline(ss, line)) {
    if (line.rfind(key + "=", 0) == 0) found = line.substr(key.size() + 1);
  }
  return found;
}

std::vector<double> read_prediction_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "prediction");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(std::stod(line));
  }
  return out;
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

TEST_CASE("cli fit: huge penalty yields an intercept-only model with MSE = Var(y)") {
  std::ofstream csv("cli_toy.csv");
  csv << "a,b,y\n1,5,2\n2,6,4\n3,7,6\n4,8,12\n";
  csv.close();
  const auto result = run_cli(
      "fit --data cli_toy.csv --target y --lambda-f 1000000 --output cli_toy_model.json");
  CHECK(result.exit_code == 0);
  const auto model = pcam::load_model("cli_toy_model.json");
  CHECK(model.shapes.empty());
  CHECK(model.intercept == doctest::Approx(6.0));
  // Population variance of {2,4,6,12}.
  CHECK(std::stod(summary_value(result.out, "train_mse")) == doctest::Approx(14.0));
  std::remove("cli_toy.csv");
  std::remove("cli_toy_model.json");
}

TEST_CASE("cli fit: agis writes one model file per support size") {
  const auto data = pcam::testing::make_additive_dataset({300, 3, 3, 0.2}, 301);
  pcam::testing::write_csv(data, "cli_agis.csv");
  const auto result = run_cli(
      "fit --data cli_agis.csv --target y --lambda-f 1 --sparsity agis --k 3 "
      "--output cli_agis_model.json");
  CHECK(result.exit_code == 0);
  for (int k = 1; k <= 3; ++k) {
    const std::string path = "cli_agis_model_k" + std::to_string(k) + ".json";
    CHECK(file_exists(path));
    const auto model = pcam::load_model(path);
    CHECK(model.sparsity_mode == "agis");
    std::remove(path.c_str());
  }
  std::remove("cli_agis.csv");
}

TEST_CASE("cli fit: model documents are identical across thread counts") {
  const auto data = pcam::testing::make_multistep_dataset(4000, 4, 6, 0.3, 303);
  pcam::testing::write_csv(data, "cli_threads.csv");
  const std::string base =
      "fit --data cli_threads.csv --target y --lambda-f 3 --seed 7 --output ";
  const auto a = run_cli(base + "cli_threads_1.json --threads 1");
  const auto b = run_cli(base + "cli_threads_8.json --threads 8");
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp("cli_threads_1.json") == slurp("cli_threads_8.json"));
  CHECK(!slurp("cli_threads_1.json").empty());
  std::remove("cli_threads.csv");
  std::remove("cli_threads_1.json");
  std::remove("cli_threads_8.json");
}

TEST_CASE("cli predict: training data reproduces the fit-time training MSE") {
  const auto data = pcam::testing::make_additive_dataset({500, 2, 2, 0.3}, 305);
  pcam::testing::write_csv(data, "cli_pred.csv");
  const auto fit = run_cli(
      "fit --data cli_pred.csv --target y --lambda-f 1 --output cli_pred_model.json");
  REQUIRE(fit.exit_code == 0);
  const double fit_mse = std::stod(summary_value(fit.out, "train_mse"));

  const auto pred = run_cli(
      "predict --model cli_pred_model.json --data cli_pred.csv --output cli_pred_out.csv");
  REQUIRE(pred.exit_code == 0);
  const auto predictions = read_prediction_csv("cli_pred_out.csv");
  REQUIRE(predictions.size() == data.n_rows());
  const double mse = pcam::testing::mse(predictions, data.target);
  CHECK(std::abs(mse - fit_mse) <= 1e-8 * (1.0 + fit_mse));

  std::remove("cli_pred.csv");
  std::remove("cli_pred_model.json");
  std::remove("cli_pred_out.csv");
}

TEST_CASE("cli predict: schema mismatch is a data error") {
  const auto data = pcam::testing::make_additive_dataset({100, 2, 1, 0.3}, 307);
  pcam::testing::write_csv(data, "cli_schema.csv");
  const auto fit = run_cli(
      "fit --data cli_schema.csv --target y --lambda-f 0.5 --output cli_schema_model.json");
  REQUIRE(fit.exit_code == 0);

  std::ofstream csv("cli_schema_missing.csv");
  csv << "x9,y\n1,2\n3,4\n";
  csv.close();
  const auto pred = run_cli(
      "predict --model cli_schema_model.json --data cli_schema_missing.csv "
      "--output cli_schema_out.csv");
  CHECK(pred.exit_code == 3);
  std::remove("cli_schema.csv");
  std::remove("cli_schema_missing.csv");
  std::remove("cli_schema_model.json");
  std::remove("cli_schema_out.csv");
}

TEST_CASE("cli: exit codes distinguish usage, data, and convergence issues") {
  SUBCASE("unknown flag is a usage error") {
    const auto result = run_cli("fit --nonsense");
    CHECK(result.exit_code == 2);
  }
  SUBCASE("--k with --sparsity l0 is a usage error") {
    std::ofstream csv("cli_conflict.csv");
    csv << "a,y\n1,2\n3,4\n";
    csv.close();
    const auto result = run_cli(
        "fit --data cli_conflict.csv --target y --lambda-f 1 --sparsity l0 --k 2 "
        "--lambda-s 1 --output m.json");
    CHECK(result.exit_code == 2);
    std::remove("cli_conflict.csv");
  }
  SUBCASE("unreadable csv is a data error") {
    const auto result = run_cli(
        "fit --data no_such_file.csv --target y --lambda-f 1 --output m.json");
    CHECK(result.exit_code == 3);
  }
  SUBCASE("unparsable cell is a data error") {
    std::ofstream csv("cli_bad.csv");
    csv << "a,y\n1,2\nbanana,4\n";
    csv.close();
    const auto result = run_cli(
        "fit --data cli_bad.csv --target y --lambda-f 1 --output m.json");
    CHECK(result.exit_code == 3);
    std::remove("cli_bad.csv");
  }
  SUBCASE("an update cap that binds is reported as a warning exit") {
    const auto data = pcam::testing::make_additive_dataset({400, 3, 3, 0.3}, 309);
    pcam::testing::write_csv(data, "cli_cap.csv");
    const auto result = run_cli(
        "fit --data cli_cap.csv --target y --lambda-f 0.5 --max-updates 2 "
        "--output cli_cap_model.json");
    CHECK(result.exit_code == 4);
    CHECK(summary_value(result.out, "converged") == "false");
    CHECK(file_exists("cli_cap_model.json"));  // the partial model is still written
    std::remove("cli_cap.csv");
    std::remove("cli_cap_model.json");
  }
}

TEST_CASE("cli benchmark: single feature gives identical threshold counts") {
  const auto data = pcam::testing::make_additive_dataset({400, 1, 0, 0.2}, 311);
  pcam::testing::write_csv(data, "cli_bench1.csv");
  const auto result = run_cli(
      "benchmark --data cli_bench1.csv --target y --lambda-f 1 --seed 3 "
      "--trace cli_bench1_trace.jsonl");
  REQUIRE(result.exit_code == 0);
  CHECK(std::stod(summary_value(result.out, "update_ratio")) == doctest::Approx(1.0));

  // Trace records are one JSON object per line with the interface fields.
  const std::string trace = slurp("cli_bench1_trace.jsonl");
  CHECK(trace.find("\"rule\":\"greedy\"") != std::string::npos);
  CHECK(trace.find("\"update_index\":1") != std::string::npos);
  CHECK(trace.find("\"objective\":") != std::string::npos);
  CHECK(trace.find("\"wall_ms\":") != std::string::npos);
  std::remove("cli_bench1.csv");
  std::remove("cli_bench1_trace.jsonl");
}

TEST_CASE("cli benchmark: budget curve and split-size validation") {
  const auto data = pcam::testing::make_multistep_dataset(2000, 5, 3, 0.4, 313);
  pcam::testing::write_csv(data, "cli_bench.csv");
  const auto result = run_cli(
      "benchmark --data cli_bench.csv --target y --lambda-f 2 --seed 5 "
      "--budget-updates 1 2 3 4 5");
  REQUIRE(result.exit_code == 0);
  std::vector<double> curve;
  std::stringstream ss(result.out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("budget rule=greedy", 0) == 0) {
      const auto pos = line.rfind("test_mse=");
      curve.push_back(std::stod(line.substr(pos + 9)));
    }
  }
  REQUIRE(curve.size() == 5);
  // Early-stopping curve: the first greedy updates each cut the test error.
  int non_increasing = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i] <= curve[i - 1] + 1e-12) ++non_increasing;
  }
  CHECK(non_increasing >= 3);
  CHECK(curve.back() < curve.front());
  std::remove("cli_bench.csv");

  std::ofstream tiny("cli_tiny.csv");
  tiny << "a,y\n1,2\n3,4\n";
  tiny.close();
  const auto too_small = run_cli("benchmark --data cli_tiny.csv --target y --lambda-f 1");
  CHECK(too_small.exit_code == 3);
  std::remove("cli_tiny.csv");
}

TEST_CASE("cli fit: lambda grid search selects and refits") {
  const auto data = pcam::testing::make_additive_dataset({600, 2, 2, 0.3}, 319);
  pcam::testing::write_csv(data, "cli_grid.csv");
  const auto result = run_cli(
      "fit --data cli_grid.csv --target y --lambda-grid 4 --seed 11 "
      "--output cli_grid_model.json");
  REQUIRE(result.exit_code == 0);
  int grid_lines = 0;
  std::stringstream ss(result.out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("lambda_grid: lambda_f=", 0) == 0) ++grid_lines;
  }
  CHECK(grid_lines == 4);
  CHECK(!summary_value(result.out, "lambda_f").empty());
  CHECK(file_exists("cli_grid_model.json"));
  std::remove("cli_grid.csv");
  std::remove("cli_grid_model.json");
}

TEST_CASE("cli export-sql: intercept-only and multi-shape forms") {
  const auto data = pcam::testing::make_additive_dataset({300, 2, 0, 0.2}, 317);
  pcam::testing::write_csv(data, "cli_sql.csv");
  const auto fit = run_cli(
      "fit --data cli_sql.csv --target y --lambda-f 1 --output cli_sql_model.json");
  REQUIRE(fit.exit_code == 0);
  const auto exported = run_cli(
      "export-sql --model cli_sql_model.json --table houses --output cli_sql_out.sql");
  REQUIRE(exported.exit_code == 0);
  const std::string sql = slurp("cli_sql_out.sql");
  CHECK(sql.find("FROM houses;") != std::string::npos);
  std::size_t cases = 0;
  for (std::size_t pos = 0; (pos = sql.find("CASE", pos)) != std::string::npos; ++pos) {
    ++cases;
  }
  const auto model = pcam::load_model("cli_sql_model.json");
  CHECK(cases == model.shapes.size());
  CHECK(model.shapes.size() == 2);

  const auto bad = run_cli(
      "export-sql --model cli_sql.csv --table t --output cli_sql_bad.sql");
  CHECK(bad.exit_code == 3);  // not a model document

  std::remove("cli_sql.csv");
  std::remove("cli_sql_model.json");
  std::remove("cli_sql_out.sql");
}
