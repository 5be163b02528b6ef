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
#include "pcam/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcam/accum.hpp"

namespace pcam {

namespace {

constexpr std::size_t kMaxSweeps = 100000;
constexpr std::size_t kMaxOuterIterations = 1000;

// Penalized-loss improvement of beta over the zero block on the aggregated
// partial residual:
//   sum_b w_b v_b beta_b - 1/2 sum_b w_b beta_b^2 - lambda_f * TV(beta)
double block_improvement(const WeightedSignal& signal, const std::vector<double>& beta,
                         double lambda_f) {
  Accumulator acc;
  for (std::size_t b = 0; b < beta.size(); ++b) {
    acc.add(signal.weights[b] * beta[b] * (signal.values[b] - 0.5 * beta[b]));
  }
  return acc.value() - lambda_f * total_variation(beta);
}

// Best-scoring block outside the support; feature == n_features() when no
// outside block has a positive score.
BlockChoice best_outside_block(const BlockState& state, const Problem& problem,
                               const FitConfig& config) {
  const auto scores = score_blocks(problem, state, config.lambda_f, config.threads);
  BlockChoice choice{problem.n_features(), 0.0};
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!state.nonzero[j] && scores[j] > choice.score) {
      choice = {j, scores[j]};
    }
  }
  return choice;
}

}  // namespace

void sweep_support(BlockState& state, const Problem& problem, const FitConfig& config) {
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const auto support = state.support();
    if (support.empty()) return;
    const double before = state.objective;
    for (std::size_t j : support) update_block(state, problem, j, config.lambda_f);
    if (before <= 0.0 || (before - state.objective) / before < config.sweep_tol) return;
  }
}

bool local_search_swap(BlockState& state, const Problem& problem,
                       const FitConfig& config) {
  const auto support = state.support();
  if (support.empty()) return false;
  const BlockChoice candidate = best_outside_block(state, problem, config);
  if (candidate.feature >= problem.n_features() || candidate.score <= 0.0) return false;

  // Tentative swaps run on scratch copies so rejected candidates leave no
  // side effects.
  BlockState best;
  bool found = false;
  for (std::size_t j : support) {
    BlockState scratch = state;
    scratch.trace.clear();
    set_block(scratch, problem, j, std::vector<double>(scratch.beta[j].size(), 0.0),
              config.lambda_f);
    update_block(scratch, problem, candidate.feature, config.lambda_f);
    if (scratch.objective < state.objective &&
        (!found || scratch.objective < best.objective)) {
      best = std::move(scratch);
      found = true;
    }
  }
  if (!found) return false;
  state = std::move(best);
  sweep_support(state, problem, config);
  return true;
}

AgisResult agis_fit(const Problem& problem, const FitConfig& config, std::size_t k,
                    bool local_search, bool iterate_local_search) {
  if (k < 1 || k > problem.n_features()) {
    throw std::invalid_argument("agis_fit: k must be in [1, p]");
  }
  const double tol = effective_stationarity_tol(problem, config);
  AgisResult result;
  BlockState state = make_zero_state(problem);

  std::size_t outer = 0;
  while (state.support().size() < k && outer++ < kMaxOuterIterations) {
    const BlockChoice choice = best_outside_block(state, problem, config);
    if (choice.feature >= problem.n_features() || choice.score <= tol) {
      result.exhausted_early = true;
      break;
    }
    update_block(state, problem, choice.feature, config.lambda_f);
    if (state.support().size() > 1) sweep_support(state, problem, config);
    if (local_search) {
      std::size_t swaps = 0;
      while (local_search_swap(state, problem, config)) {
        if (!iterate_local_search || ++swaps >= problem.n_features()) break;
      }
    }
    BlockState snapshot = state;
    snapshot.converged = true;
    snapshot.trace.clear();
    result.models.push_back(std::move(snapshot));
  }
  return result;
}

void l0_block_update(BlockState& state, const Problem& problem, std::size_t k,
                     double lambda_f, double lambda_s) {
  const FeatureBins& bins = problem.bins.features[k];
  if (bins.n_bins() <= 1) return;  // constant features never enter the model
  const WeightedSignal signal = partial_residual_signal(state, problem, k);
  std::vector<double> beta_star = solve_flsa(signal, lambda_f);
  const double improvement = block_improvement(signal, beta_star, lambda_f);
  if (improvement <= lambda_s) {
    beta_star.assign(beta_star.size(), 0.0);
  }
  set_block(state, problem, k, beta_star, lambda_f);
  ++state.update_count;
}

double group_l0_objective(const BlockState& state, double lambda_f, double lambda_s) {
  (void)lambda_f;  // already folded into state.objective
  return state.objective + lambda_s * static_cast<double>(state.support().size());
}

GroupL0Result group_l0_fit(const Problem& problem, const FitConfig& config,
                           double lambda_s, bool local_search) {
  if (!(lambda_s >= 0.0)) {
    throw std::invalid_argument("group_l0_fit: lambda_s must be nonnegative");
  }
  BlockState state = make_zero_state(problem);
  state.converged = true;
  const std::size_t cap =
      config.max_block_updates != 0 ? config.max_block_updates
                                    : 100 * problem.n_features();

  for (std::size_t outer = 0; outer < kMaxOuterIterations; ++outer) {
    // CBCD sweeps with the thresholded block update.
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
      const double before = group_l0_objective(state, config.lambda_f, lambda_s);
      for (std::size_t j = 0; j < problem.n_features(); ++j) {
        if (state.update_count >= cap) {
          state.converged = false;
          return {state, group_l0_objective(state, config.lambda_f, lambda_s)};
        }
        l0_block_update(state, problem, j, config.lambda_f, lambda_s);
      }
      const double after = group_l0_objective(state, config.lambda_f, lambda_s);
      if (before <= 0.0 || (before - after) / before < config.sweep_tol) break;
    }
    if (!local_search) break;
    const double before_swap = group_l0_objective(state, config.lambda_f, lambda_s);
    local_search_swap(state, problem, config);
    const double after_swap = group_l0_objective(state, config.lambda_f, lambda_s);
    const double scale = std::max(before_swap, 1.0);
    if (before_swap - after_swap <= config.sweep_tol * scale) break;
  }
  return {state, group_l0_objective(state, config.lambda_f, lambda_s)};
}

double lambda_s_max(const Problem& problem, const FitConfig& config) {
  const BlockState state = make_zero_state(problem);
  double best = 0.0;
  for (std::size_t j = 0; j < problem.n_features(); ++j) {
    if (problem.bins.features[j].n_bins() <= 1) continue;
    const WeightedSignal signal = partial_residual_signal(state, problem, j);
    const auto beta = solve_flsa(signal, config.lambda_f);
    best = std::max(best, block_improvement(signal, beta, config.lambda_f));
  }
  return best;
}

std::vector<double> lambda_s_grid(double lambda_max, std::size_t points, double decay) {
  if (points == 0 || !(decay > 0.0) || !(decay < 1.0)) {
    throw std::invalid_argument("lambda_s_grid: need points >= 1 and decay in (0,1)");
  }
  std::vector<double> grid(points);
  double value = lambda_max;
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = value;
    value *= decay;
  }
  return grid;
}

}  // namespace pcam
