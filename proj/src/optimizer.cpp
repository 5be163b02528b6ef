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
#include "pcam/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcam/accum.hpp"
#include "pcam/parallel.hpp"

namespace pcam {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::size_t resolve_update_cap(const Problem& problem, const FitConfig& config) {
  return config.max_block_updates != 0 ? config.max_block_updates
                                       : 100 * problem.n_features();
}

// Scoring in parallel is worthwhile only when the gather work dominates the
// thread spawn cost.
bool parallel_scoring(const Problem& problem, std::size_t threads) {
  return threads > 1 && problem.n_rows() * problem.n_features() >= (1u << 15);
}

}  // namespace

Problem prepare_problem(const Dataset& data, std::size_t max_bins) {
  validate_for_fit(data);
  Problem problem;
  problem.data = &data;
  problem.index = build_sorted_index(data);
  problem.bins = build_bins(data, problem.index, max_bins);

  const std::size_t n = data.n_rows();
  problem.y_mean = compensated_sum(data.target) / static_cast<double>(n);
  problem.y_centered.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    problem.y_centered[i] = data.target[i] - problem.y_mean;
  }
  problem.y_sq_norm = compensated_squared_norm(problem.y_centered);
  return problem;
}

std::vector<std::size_t> BlockState::support() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < nonzero.size(); ++j) {
    if (nonzero[j]) out.push_back(j);
  }
  return out;
}

BlockState make_zero_state(const Problem& problem) {
  BlockState state;
  state.beta.resize(problem.n_features());
  for (std::size_t j = 0; j < problem.n_features(); ++j) {
    state.beta[j].assign(problem.bins.features[j].n_bins(), 0.0);
  }
  state.nonzero.assign(problem.n_features(), 0);
  state.residual = problem.y_centered;
  state.objective = 0.5 * problem.y_sq_norm;
  state.y_mean = problem.y_mean;
  return state;
}

double objective_value(const BlockState& state, double lambda_f) {
  double tv = 0.0;
  for (const auto& beta : state.beta) tv += total_variation(beta);
  return 0.5 * compensated_squared_norm(state.residual) + lambda_f * tv;
}

std::vector<double> block_theta(const std::vector<double>& beta) {
  if (beta.size() <= 1) return {};
  std::vector<double> theta(beta.size() - 1);
  for (std::size_t b = 0; b + 1 < beta.size(); ++b) theta[b] = beta[b + 1] - beta[b];
  return theta;
}

std::vector<double> block_gradient(const std::vector<double>& residual,
                                   const FeatureBins& bins) {
  const std::size_t n_bins = bins.n_bins();
  if (n_bins <= 1) return {};
  std::vector<double> bin_sum(n_bins, 0.0);
  for (std::size_t i = 0; i < residual.size(); ++i) {
    bin_sum[bins.row_to_bin[i]] += residual[i];
  }
  std::vector<double> gradient(n_bins - 1);
  double suffix = 0.0;
  for (std::size_t b = n_bins; b-- > 1;) {
    suffix += bin_sum[b];
    gradient[b - 1] = -suffix;
  }
  return gradient;
}

std::vector<double> steepest_directions(const std::vector<double>& gradient,
                                        const std::vector<double>& theta,
                                        double lambda_f) {
  if (gradient.size() != theta.size()) {
    throw std::invalid_argument("steepest_directions: gradient/theta length mismatch");
  }
  std::vector<double> d(gradient.size());
  for (std::size_t b = 0; b < gradient.size(); ++b) {
    if (theta[b] == 0.0) {
      const double mag = std::abs(gradient[b]) - lambda_f;
      d[b] = mag > 0.0 ? mag : 0.0;
    } else {
      const double sign = theta[b] > 0.0 ? 1.0 : -1.0;
      d[b] = std::abs(gradient[b] + sign * lambda_f);
    }
  }
  return d;
}

std::vector<double> score_blocks(const Problem& problem, const BlockState& state,
                                 double lambda_f, std::size_t threads) {
  std::vector<double> scores(problem.n_features(), 0.0);
  const auto score_one = [&](std::size_t j) {
    const FeatureBins& bins = problem.bins.features[j];
    if (bins.n_bins() <= 1) {
      scores[j] = 0.0;
      return;
    }
    const auto gradient = block_gradient(state.residual, bins);
    const auto d = steepest_directions(gradient, block_theta(state.beta[j]), lambda_f);
    double sq = 0.0;
    for (double x : d) sq += x * x;
    scores[j] = sq;
  };
  if (parallel_scoring(problem, threads)) {
    parallel_for(problem.n_features(), threads, score_one);
  } else {
    for (std::size_t j = 0; j < problem.n_features(); ++j) score_one(j);
  }
  return scores;
}

BlockChoice select_block_bgs(const Problem& problem, const BlockState& state,
                             double lambda_f, std::size_t threads) {
  const auto scores = score_blocks(problem, state, lambda_f, threads);
  BlockChoice choice;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > choice.score) {
      choice.feature = j;
      choice.score = scores[j];
    }
  }
  return choice;
}

WeightedSignal partial_residual_signal(const BlockState& state, const Problem& problem,
                                       std::size_t k) {
  WeightedSignal signal = aggregate_residual(state.residual, problem.bins.features[k]);
  const auto& beta = state.beta[k];
  for (std::size_t b = 0; b < beta.size(); ++b) signal.values[b] += beta[b];
  return signal;
}

void set_block(BlockState& state, const Problem& problem, std::size_t k,
               const std::vector<double>& new_beta, double lambda_f) {
  auto& beta = state.beta[k];
  if (new_beta.size() != beta.size()) {
    throw std::invalid_argument("set_block: coefficient length mismatch");
  }
  if (new_beta == beta) return;

  const FeatureBins& bins = problem.bins.features[k];
  std::vector<double> delta(beta.size());
  for (std::size_t b = 0; b < beta.size(); ++b) delta[b] = new_beta[b] - beta[b];
  for (std::size_t i = 0; i < state.residual.size(); ++i) {
    state.residual[i] -= delta[bins.row_to_bin[i]];
  }
  beta = new_beta;
  state.nonzero[k] = std::any_of(beta.begin(), beta.end(), [](double b) { return b != 0.0; });
  state.objective = objective_value(state, lambda_f);
}

void update_block(BlockState& state, const Problem& problem, std::size_t k,
                  double lambda_f) {
  const WeightedSignal signal = partial_residual_signal(state, problem, k);
  set_block(state, problem, k, solve_flsa(signal, lambda_f), lambda_f);
  ++state.update_count;
}

double effective_stationarity_tol(const Problem& problem, const FitConfig& config) {
  return config.stationarity_tol * problem.y_sq_norm;
}

BlockState fit_gbcd(const Problem& problem, const FitConfig& config,
                    const UpdateObserver* on_update) {
  const auto start = Clock::now();
  BlockState state = make_zero_state(problem);
  const double tol = effective_stationarity_tol(problem, config);
  const std::size_t cap = resolve_update_cap(problem, config);

  while (true) {
    const BlockChoice choice = select_block_bgs(problem, state, config.lambda_f,
                                                config.threads);
    if (choice.score <= tol) {
      state.converged = true;
      break;
    }
    if (state.update_count >= cap) {
      state.converged = false;
      break;
    }
    update_block(state, problem, choice.feature, config.lambda_f);
    state.trace.push_back({state.update_count, choice.feature, choice.score,
                           state.objective, elapsed_ms(start)});
    if (on_update && *on_update) (*on_update)(state);
  }
  return state;
}

BlockState fit_cbcd(const Problem& problem, const FitConfig& config,
                    const UpdateObserver* on_update) {
  const auto start = Clock::now();
  BlockState state = make_zero_state(problem);
  const std::size_t cap = resolve_update_cap(problem, config);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  while (true) {
    const double before = state.objective;
    for (std::size_t j = 0; j < problem.n_features(); ++j) {
      if (problem.bins.features[j].n_bins() <= 1) continue;  // constant feature
      if (state.update_count >= cap) {
        state.converged = false;
        return state;
      }
      update_block(state, problem, j, config.lambda_f);
      state.trace.push_back({state.update_count, j, nan, state.objective,
                             elapsed_ms(start)});
      if (on_update && *on_update) (*on_update)(state);
    }
    const double decrease = before - state.objective;
    if (before <= 0.0 || decrease / before < config.sweep_tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

BlockState fit(const Problem& problem, const FitConfig& config,
               const UpdateObserver* on_update) {
  return config.selection_rule == FitConfig::Rule::kCyclic
             ? fit_cbcd(problem, config, on_update)
             : fit_gbcd(problem, config, on_update);
}

BlockState fit_gbcd(const Dataset& data, const FitConfig& config) {
  return fit_gbcd(prepare_problem(data, config.max_bins), config);
}

BlockState fit_cbcd(const Dataset& data, const FitConfig& config) {
  return fit_cbcd(prepare_problem(data, config.max_bins), config);
}

}  // namespace pcam
