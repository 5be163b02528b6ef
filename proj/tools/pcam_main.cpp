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
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcam/errors.hpp"
#include "pcam/model.hpp"
#include "pcam/optimizer.hpp"
#include "pcam/sparsity.hpp"

namespace {

using namespace pcam;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitWarning = 4;  // finished, but not to tolerance

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

// Heuristic default when --lambda-f is not given; always worth tuning.
double default_lambda_f(const Problem& problem, std::size_t max_bins) {
  const double n = static_cast<double>(problem.n_rows());
  const double sd = std::sqrt(problem.y_sq_norm / n);
  return 0.1 * n * sd / static_cast<double>(max_bins);
}

double train_mse(const BlockState& state) {
  double acc = 0.0;
  for (double r : state.residual) acc += r * r;
  return acc / static_cast<double>(state.residual.size());
}

std::string model_path_for_k(const std::string& path, std::size_t k) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of("/\\");
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  const std::string suffix = "_k" + std::to_string(k);
  if (!has_ext) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("failed writing file: " + path);
}

void write_predictions(const std::string& path, const std::vector<double>& predictions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "prediction\n";
  for (double p : predictions) out << format_double(p) << '\n';
  if (!out) throw DataError("failed writing file: " + path);
}

struct Split {
  Dataset train;
  Dataset test;
};

Split split_rows(const Dataset& data, double test_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> rows(data.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::shuffle(rows.begin(), rows.end(), rng);
  const std::size_t n_test =
      static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(rows.size())));
  const auto take = [&](std::size_t lo, std::size_t hi) {
    Dataset part;
    part.feature_names = data.feature_names;
    part.columns.resize(data.columns.size());
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < data.columns.size(); ++j) {
        part.columns[j].push_back(data.columns[j][rows[i]]);
      }
      part.target.push_back(data.target[rows[i]]);
    }
    return part;
  };
  return {take(n_test, rows.size()), take(0, n_test)};
}

double mse_against(const std::vector<double>& predictions, const std::vector<double>& truth) {
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truth[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predictions.size());
}

struct FitCli {
  std::string data_path;
  std::string target;
  std::string output;
  double lambda_f = -1.0;  // negative = use the default heuristic
  std::size_t max_bins = 256;
  std::string sparsity = "none";
  std::size_t k = 0;
  double lambda_s = -1.0;
  bool no_local_search = false;
  bool iterate_local_search = false;
  std::string rule = "greedy";
  double tol = 1e-10;
  double sweep_tol = 1e-8;
  std::size_t max_updates = 0;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  std::size_t lambda_grid = 0;
  std::string missing = "error";
};

MissingPolicy parse_missing(const std::string& name) {
  if (name == "error") return MissingPolicy::kError;
  if (name == "drop") return MissingPolicy::kDropRow;
  throw CLI::ValidationError("--missing must be 'error' or 'drop'");
}

int run_fit(const FitCli& cli) {
  // Flag consistency first, so misuse never triggers a long fit.
  if (cli.sparsity != "none" && cli.sparsity != "agis" && cli.sparsity != "l0") {
    std::cerr << "error: --sparsity must be none, agis, or l0\n";
    return kExitUsage;
  }
  if (cli.k != 0 && cli.sparsity != "agis") {
    std::cerr << "error: --k is only valid with --sparsity agis\n";
    return kExitUsage;
  }
  if (cli.sparsity == "agis" && cli.k == 0) {
    std::cerr << "error: --sparsity agis requires --k\n";
    return kExitUsage;
  }
  if (cli.lambda_s >= 0.0 && cli.sparsity != "l0") {
    std::cerr << "error: --lambda-s is only valid with --sparsity l0\n";
    return kExitUsage;
  }
  if (cli.sparsity == "l0" && cli.lambda_s < 0.0) {
    std::cerr << "error: --sparsity l0 requires --lambda-s\n";
    return kExitUsage;
  }
  if (cli.rule != "greedy" && cli.rule != "cyclic") {
    std::cerr << "error: --rule must be greedy or cyclic\n";
    return kExitUsage;
  }
  if (cli.lambda_grid > 0 && cli.sparsity != "none") {
    std::cerr << "error: --lambda-grid is only valid with --sparsity none\n";
    return kExitUsage;
  }

  const auto start = Clock::now();
  std::size_t dropped = 0;
  const Dataset data = load_csv(cli.data_path, cli.target, parse_missing(cli.missing), &dropped);
  if (dropped > 0) std::cout << "rows_dropped=" << dropped << "\n";
  const Problem problem = prepare_problem(data, cli.max_bins);

  FitConfig config;
  config.max_bins = cli.max_bins;
  config.stationarity_tol = cli.tol;
  config.sweep_tol = cli.sweep_tol;
  config.max_block_updates = cli.max_updates;
  config.threads = cli.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : cli.threads;
  config.selection_rule =
      cli.rule == "cyclic" ? FitConfig::Rule::kCyclic : FitConfig::Rule::kGreedy;

  if (cli.lambda_f >= 0.0) {
    config.lambda_f = cli.lambda_f;
  } else {
    config.lambda_f = default_lambda_f(problem, cli.max_bins);
    std::cout << "note: --lambda-f not given; using heuristic default "
              << format_double(config.lambda_f)
              << " (0.1*n*std(y)/max_bins). Tune it for your data.\n";
  }

  // Optional holdout grid search over lambda_f.
  if (cli.lambda_grid > 0) {
    const Split split = split_rows(data, 0.2, cli.seed);
    if (split.test.n_rows() < 1 || split.train.n_rows() < 2) {
      throw DataError("dataset too small for the lambda grid holdout split");
    }
    const Problem grid_problem = prepare_problem(split.train, cli.max_bins);
    const double center = config.lambda_f;
    double best_lambda = center;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < cli.lambda_grid; ++g) {
      const double t = cli.lambda_grid == 1
                           ? 0.5
                           : static_cast<double>(g) / static_cast<double>(cli.lambda_grid - 1);
      const double lambda = center * std::pow(10.0, -2.0 + 4.0 * t);
      FitConfig grid_config = config;
      grid_config.lambda_f = lambda;
      const BlockState state = fit(grid_problem, grid_config);
      const PCAModel model = extract_model(state, grid_problem, lambda);
      const double holdout = mse_against(predict(model, split.test), split.test.target);
      std::cout << "lambda_grid: lambda_f=" << format_double(lambda)
                << " holdout_mse=" << format_double(holdout) << "\n";
      if (holdout < best_mse) {
        best_mse = holdout;
        best_lambda = lambda;
      }
    }
    config.lambda_f = best_lambda;
    std::cout << "lambda_grid: selected lambda_f=" << format_double(best_lambda) << "\n";
  }

  bool warning = false;
  BlockState final_state;
  std::vector<std::string> written;

  if (cli.sparsity == "agis") {
    const AgisResult result = agis_fit(problem, config, cli.k, !cli.no_local_search,
                                       cli.iterate_local_search);
    if (result.exhausted_early) {
      std::cerr << "warning: only " << result.models.size()
                << " features had a positive selection score; returning "
                << result.models.size() << " model(s) instead of " << cli.k << "\n";
      warning = true;
    }
    if (result.models.empty()) throw DataError("no selectable features; nothing to fit");
    for (std::size_t t = 0; t < result.models.size(); ++t) {
      const PCAModel model =
          extract_model(result.models[t], problem, config.lambda_f, "agis");
      const std::string path = model_path_for_k(cli.output, t + 1);
      save_model(model, path);
      written.push_back(path);
    }
    final_state = result.models.back();
  } else if (cli.sparsity == "l0") {
    const GroupL0Result result =
        group_l0_fit(problem, config, cli.lambda_s, !cli.no_local_search);
    if (!result.state.converged) warning = true;
    final_state = result.state;
    const PCAModel model = extract_model(final_state, problem, config.lambda_f, "l0");
    save_model(model, cli.output);
    written.push_back(cli.output);
    std::cout << "objective_l0=" << format_double(result.objective_l0) << "\n";
  } else {
    final_state = fit(problem, config);
    if (!final_state.converged) warning = true;
    const PCAModel model = extract_model(final_state, problem, config.lambda_f, "none");
    save_model(model, cli.output);
    written.push_back(cli.output);
  }

  std::cout << "n=" << problem.n_rows() << "\n"
            << "p=" << problem.n_features() << "\n"
            << "lambda_f=" << format_double(config.lambda_f) << "\n"
            << "updates=" << final_state.update_count << "\n"
            << "objective=" << format_double(final_state.objective) << "\n"
            << "train_mse=" << format_double(train_mse(final_state)) << "\n"
            << "support=" << final_state.support().size() << "\n"
            << "converged=" << (final_state.converged ? "true" : "false") << "\n"
            << "elapsed_ms=" << format_double(elapsed_ms(start)) << "\n";
  for (const auto& path : written) std::cout << "model=" << path << "\n";

  if (warning) {
    std::cerr << "warning: fit finished without reaching the requested tolerance\n";
    return kExitWarning;
  }
  return kExitOk;
}

struct PredictCli {
  std::string model_path;
  std::string data_path;
  std::string output;
  std::string missing = "error";
};

int run_predict(const PredictCli& cli) {
  const PCAModel model = load_model(cli.model_path);
  const Dataset data = load_csv(cli.data_path, "", parse_missing(cli.missing));
  const auto predictions = predict(model, data);
  write_predictions(cli.output, predictions);
  std::cout << "rows=" << predictions.size() << "\n"
            << "output=" << cli.output << "\n";
  return kExitOk;
}

struct ExportSqlCli {
  std::string model_path;
  std::string table;
  std::string output;
};

int run_export_sql(const ExportSqlCli& cli) {
  const PCAModel model = load_model(cli.model_path);
  write_text_file(cli.output, export_sql(model, cli.table));
  std::cout << "output=" << cli.output << "\n";
  return kExitOk;
}

struct BenchmarkCli {
  std::string data_path;
  std::string target;
  double lambda_f = -1.0;
  double test_fraction = 0.2;
  std::vector<std::size_t> budgets;
  std::size_t max_bins = 256;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  double sweep_tol = 1e-8;
  std::size_t max_updates = 0;
  std::string trace_path;
  std::string missing = "error";
};

struct RuleRun {
  std::string name;
  BlockState state;
  double wall_ms = 0.0;
  double final_test_mse = 0.0;
  std::vector<std::pair<std::size_t, double>> budget_test_mse;
};

int run_benchmark(const BenchmarkCli& cli) {
  const Dataset data = load_csv(cli.data_path, cli.target, parse_missing(cli.missing));
  const Split split = split_rows(data, cli.test_fraction, cli.seed);
  if (split.test.n_rows() < 1 || split.train.n_rows() < 2) {
    throw DataError("dataset too small for a " + format_double(cli.test_fraction) +
                    " test split");
  }
  const Problem problem = prepare_problem(split.train, cli.max_bins);

  FitConfig config;
  config.max_bins = cli.max_bins;
  config.threads = cli.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : cli.threads;
  config.stationarity_tol = cli.tol;
  config.sweep_tol = cli.sweep_tol;
  // Default cap: generous enough for both rules to converge, so the
  // updates-to-threshold comparison reflects the selection rules rather than
  // the budget.
  config.max_block_updates = cli.max_updates == 0 ? 100000 * problem.n_features()
                                                  : cli.max_updates;
  config.lambda_f =
      cli.lambda_f >= 0.0 ? cli.lambda_f : default_lambda_f(problem, cli.max_bins);

  std::set<std::size_t> budget_set(cli.budgets.begin(), cli.budgets.end());

  const auto run_rule = [&](FitConfig::Rule rule, const std::string& name) {
    RuleRun run;
    run.name = name;
    FitConfig rule_config = config;
    rule_config.selection_rule = rule;
    const UpdateObserver observer = [&](const BlockState& state) {
      if (budget_set.count(state.update_count)) {
        const PCAModel snapshot = extract_model(state, problem, rule_config.lambda_f);
        run.budget_test_mse.emplace_back(
            state.update_count,
            mse_against(predict(snapshot, split.test), split.test.target));
      }
    };
    const auto start = Clock::now();
    run.state = fit(problem, rule_config, &observer);
    run.wall_ms = elapsed_ms(start);
    const PCAModel model = extract_model(run.state, problem, rule_config.lambda_f);
    run.final_test_mse = mse_against(predict(model, split.test), split.test.target);
    return run;
  };

  const RuleRun greedy = run_rule(FitConfig::Rule::kGreedy, "greedy");
  const RuleRun cyclic = run_rule(FitConfig::Rule::kCyclic, "cyclic");

  // Updates needed to get within 1% of the better final training objective.
  const double best_final = std::min(greedy.state.objective, cyclic.state.objective);
  const double threshold = best_final * 1.01;
  const auto updates_to_threshold = [&](const BlockState& state) -> std::size_t {
    for (const auto& entry : state.trace) {
      if (entry.objective <= threshold) return entry.update_index;
    }
    return state.update_count;
  };
  const auto check_monotone = [](const RuleRun& run) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& entry : run.state.trace) {
      if (entry.objective > prev + 1e-9 * (1.0 + std::abs(prev))) {
        std::cerr << "warning: " << run.name << " trace increased at update "
                  << entry.update_index << "\n";
      }
      prev = entry.objective;
    }
  };
  check_monotone(greedy);
  check_monotone(cyclic);

  const std::size_t greedy_updates = updates_to_threshold(greedy.state);
  const std::size_t cyclic_updates = updates_to_threshold(cyclic.state);
  for (const RuleRun* run : {&greedy, &cyclic}) {
    std::cout << "rule=" << run->name << " updates=" << run->state.update_count
              << " to_1pct=" << updates_to_threshold(run->state)
              << " objective=" << format_double(run->state.objective)
              << " train_mse=" << format_double(train_mse(run->state))
              << " test_mse=" << format_double(run->final_test_mse)
              << " wall_ms=" << format_double(run->wall_ms) << "\n";
    for (const auto& [budget, mse] : run->budget_test_mse) {
      std::cout << "budget rule=" << run->name << " updates=" << budget
                << " test_mse=" << format_double(mse) << "\n";
    }
  }
  std::cout << "update_ratio="
            << format_double(static_cast<double>(cyclic_updates) /
                             std::max<double>(1.0, static_cast<double>(greedy_updates)))
            << "\n";

  if (!cli.trace_path.empty()) {
    std::ofstream out(cli.trace_path);
    if (!out) throw DataError("cannot write trace file: " + cli.trace_path);
    for (const RuleRun* run : {&greedy, &cyclic}) {
      for (const auto& entry : run->state.trace) {
        nlohmann::json record;
        record["rule"] = run->name;
        record["update_index"] = entry.update_index;
        record["feature"] = problem.data->feature_names[entry.feature];
        record["objective"] = entry.objective;
        record["wall_ms"] = entry.wall_ms;
        out << record.dump() << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-constant additive model fitting engine"};
  app.require_subcommand(1);

  FitCli fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV dataset");
  fit_cmd->add_option("--data", fit.data_path, "Training CSV path")->required();
  fit_cmd->add_option("--target", fit.target, "Target column name")->required();
  fit_cmd->add_option("--output", fit.output, "Model output path")->required();
  fit_cmd->add_option("--lambda-f", fit.lambda_f, "Fusion penalty (default: heuristic)")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--max-bins", fit.max_bins, "Maximum bins per feature (default 256)");
  fit_cmd->add_option("--sparsity", fit.sparsity, "none, agis, or l0 (default none)")
      ->check(CLI::IsMember({"none", "agis", "l0"}));
  fit_cmd->add_option("--k", fit.k, "AGIS: number of features to select");
  fit_cmd->add_option("--lambda-s", fit.lambda_s, "group-l0 sparsity penalty")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_flag("--no-local-search", fit.no_local_search,
                    "Disable the swap local search");
  fit_cmd->add_flag("--iterate-local-search", fit.iterate_local_search,
                    "Iterate swaps to a fixed point");
  fit_cmd->add_option("--rule", fit.rule, "Block selection: greedy or cyclic")
      ->check(CLI::IsMember({"greedy", "cyclic"}));
  fit_cmd->add_option("--tol", fit.tol,
                      "Stationarity tolerance, scaled by n*Var(y) (default 1e-10)");
  fit_cmd->add_option("--sweep-tol", fit.sweep_tol,
                      "Relative objective decrease per cyclic sweep (default 1e-8)");
  fit_cmd->add_option("--max-updates", fit.max_updates,
                      "Block update cap (default 100*p)");
  fit_cmd->add_option("--threads", fit.threads, "Scoring threads (default: all cores)");
  fit_cmd->add_option("--seed", fit.seed, "Seed for any internal splits");
  fit_cmd->add_option("--lambda-grid", fit.lambda_grid,
                      "Evaluate this many log-spaced lambda_f values on a holdout");
  fit_cmd->add_option("--missing", fit.missing, "Missing cells: error or drop")
      ->check(CLI::IsMember({"error", "drop"}));

  PredictCli predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Score a CSV with a saved model");
  predict_cmd->add_option("--model", predict_args.model_path, "Model path")->required();
  predict_cmd->add_option("--data", predict_args.data_path, "Input CSV path")->required();
  predict_cmd->add_option("--output", predict_args.output, "Predictions CSV path")
      ->required();
  predict_cmd->add_option("--missing", predict_args.missing, "Missing cells: error or drop")
      ->check(CLI::IsMember({"error", "drop"}));

  ExportSqlCli export_args;
  CLI::App* export_cmd =
      app.add_subcommand("export-sql", "Emit a SQL SELECT that scores the model");
  export_cmd->add_option("--model", export_args.model_path, "Model path")->required();
  export_cmd->add_option("--table", export_args.table, "Input table name")->required();
  export_cmd->add_option("--output", export_args.output, "SQL output path")->required();

  BenchmarkCli bench;
  CLI::App* bench_cmd =
      app.add_subcommand("benchmark", "Compare greedy and cyclic block selection");
  bench_cmd->add_option("--data", bench.data_path, "CSV path")->required();
  bench_cmd->add_option("--target", bench.target, "Target column name")->required();
  bench_cmd->add_option("--lambda-f", bench.lambda_f, "Fusion penalty (default: heuristic)")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--test-fraction", bench.test_fraction,
                        "Holdout fraction (default 0.2)")
      ->check(CLI::Range(0.0, 0.95));
  bench_cmd->add_option("--budget-updates", bench.budgets,
                        "Update budgets for the early-stopping curve");
  bench_cmd->add_option("--max-bins", bench.max_bins, "Maximum bins per feature");
  bench_cmd->add_option("--threads", bench.threads, "Scoring threads");
  bench_cmd->add_option("--seed", bench.seed, "Split seed");
  bench_cmd->add_option("--tol", bench.tol,
                        "Stationarity tolerance, scaled by n*Var(y) (default 1e-10)");
  bench_cmd->add_option("--sweep-tol", bench.sweep_tol,
                        "Relative objective decrease per cyclic sweep (default 1e-8)");
  bench_cmd->add_option("--max-updates", bench.max_updates,
                        "Block update cap per rule (default 100000*p)");
  bench_cmd->add_option("--trace", bench.trace_path,
                        "Write per-update records as JSON lines");
  bench_cmd->add_option("--missing", bench.missing, "Missing cells: error or drop")
      ->check(CLI::IsMember({"error", "drop"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit);
    if (predict_cmd->parsed()) return run_predict(predict_args);
    if (export_cmd->parsed()) return run_export_sql(export_args);
    if (bench_cmd->parsed()) return run_benchmark(bench);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ModelFormatError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
