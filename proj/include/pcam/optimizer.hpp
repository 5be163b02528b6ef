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
#ifndef PCAM_OPTIMIZER_HPP
#define PCAM_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "pcam/data.hpp"

namespace pcam {

// The fitted objective is
//   1/2 |r|^2 + lambda_f * sum_j TV(beta_j),   r = y_centered - sum_j pred_j,
// with each block beta_j held at bin level. Block selection works on the
// difference variables theta_j = successive differences of beta_j, whose
// LASSO-reformulation gradient is a reverse cumulative sum of per-bin
// residual sums; the reformulation design matrix is never materialized.
struct FitConfig {
  enum class Rule { kGreedy, kCyclic };

  double lambda_f = 1.0;
  std::size_t max_bins = 256;
  Rule selection_rule = Rule::kGreedy;
  // Stop when the best BGS score drops to stationarity_tol * n * Var(y).
  double stationarity_tol = 1e-10;
  std::size_t max_block_updates = 0;  // 0 means 100 * p
  // Cyclic sweeps stop when the relative objective decrease per sweep falls
  // below sweep_tol.
  double sweep_tol = 1e-8;
  std::size_t threads = 1;
};

struct TraceEntry {
  std::size_t update_index = 0;  // 1-based, counts dynamic-programming updates
  std::size_t feature = 0;
  double score = 0.0;  // BGS score at selection; NaN for cyclic sweeps
  double objective = 0.0;
  double wall_ms = 0.0;
};

// Immutable fit-time view of a dataset: sorted index, bins, centered target.
struct Problem {
  const Dataset* data = nullptr;
  SortedIndex index;
  BinMap bins;
  std::vector<double> y_centered;
  double y_mean = 0.0;
  double y_sq_norm = 0.0;  // |y_centered|^2 = n * Var(y)

  std::size_t n_rows() const { return y_centered.size(); }
  std::size_t n_features() const { return bins.features.size(); }
};

Problem prepare_problem(const Dataset& data, std::size_t max_bins);

struct BlockState {
  std::vector<std::vector<double>> beta;  // per feature, bin-level
  std::vector<std::uint8_t> nonzero;      // support flags, kept in step with beta
  std::vector<double> residual;           // y_centered minus all contributions
  double objective = 0.0;
  std::size_t update_count = 0;
  bool converged = false;
  double y_mean = 0.0;
  std::vector<TraceEntry> trace;

  std::vector<std::size_t> support() const;
};

BlockState make_zero_state(const Problem& problem);

// Objective recomputed from the maintained residual and coefficients with
// compensated summation (traces are asserted monotone to 1e-12).
double objective_value(const BlockState& state, double lambda_f);

// theta_j: successive differences of a block's bin-level coefficients.
std::vector<double> block_theta(const std::vector<double>& beta);

// Gradient of the implicit smooth loss for one block: coordinate b is the
// negated sum of per-bin residual sums over bins b+1..B (a reverse cumulative
// sum down the sorted order). Length B-1; empty for constant features.
std::vector<double> block_gradient(const std::vector<double>& residual,
                                   const FeatureBins& bins);

// Magnitude of the most negative directional derivative per coordinate:
//   d_b = |soft_threshold(g_b, lambda_f)|        if theta_b = 0
//   d_b = |g_b + sign(theta_b) * lambda_f|       otherwise
std::vector<double> steepest_directions(const std::vector<double>& gradient,
                                        const std::vector<double>& theta,
                                        double lambda_f);

// Squared norms |d_j|^2 for every block, scored independently (parallel over
// features when threads > 1; results are schedule-independent).
std::vector<double> score_blocks(const Problem& problem, const BlockState& state,
                                 double lambda_f, std::size_t threads = 1);

// Best block by squared steepest-direction norm, ties broken by lowest index.
struct BlockChoice {
  std::size_t feature = 0;
  double score = 0.0;
};
BlockChoice select_block_bgs(const Problem& problem, const BlockState& state,
                             double lambda_f, std::size_t threads = 1);

// Bin-aggregated partial residual for block k (residual with block k's own
// contribution restored).
WeightedSignal partial_residual_signal(const BlockState& state, const Problem& problem,
                                       std::size_t k);

// Replaces block k's coefficients, updating residual and objective.
void set_block(BlockState& state, const Problem& problem, std::size_t k,
               const std::vector<double>& new_beta, double lambda_f);

// Exact block minimization: solves the weighted FLSA on the partial residual.
// Counts as one dynamic-programming update.
void update_block(BlockState& state, const Problem& problem, std::size_t k,
                  double lambda_f);

using UpdateObserver = std::function<void(const BlockState&)>;

// Greedy BCD: BGS-select, update, repeat until the best score reaches the
// stationarity tolerance or the update cap binds (converged = false then).
BlockState fit_gbcd(const Problem& problem, const FitConfig& config,
                    const UpdateObserver* on_update = nullptr);

// Cyclic baseline: round-robin sweeps until the relative per-sweep objective
// decrease falls below sweep_tol.
BlockState fit_cbcd(const Problem& problem, const FitConfig& config,
                    const UpdateObserver* on_update = nullptr);

BlockState fit_gbcd(const Dataset& data, const FitConfig& config);
BlockState fit_cbcd(const Dataset& data, const FitConfig& config);

// Dispatches on config.selection_rule.
BlockState fit(const Problem& problem, const FitConfig& config,
               const UpdateObserver* on_update = nullptr);

double effective_stationarity_tol(const Problem& problem, const FitConfig& config);

}  // namespace pcam

#endif  // PCAM_OPTIMIZER_HPP
