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
#ifndef PCAM_SPARSITY_HPP
#define PCAM_SPARSITY_HPP

#include <vector>

#include "pcam/optimizer.hpp"

namespace pcam {

struct SparsityConfig {
  enum class Mode { kNone, kAgis, kGroupL0 };
  Mode mode = Mode::kNone;
  std::size_t k = 0;        // AGIS: maximum number of features to select
  double lambda_s = 0.0;    // group-l0 penalty per nonzero block
  bool local_search = true;
  bool iterate_local_search = false;  // iterate swaps to a fixed point (capped at p)
};

// Cyclic updates over the current support until the relative per-sweep
// objective decrease falls below config.sweep_tol.
void sweep_support(BlockState& state, const Problem& problem, const FitConfig& config);

// One BGS local-search step: candidate = best block outside the support; each
// support block is tentatively zeroed (on a scratch state) while the candidate
// is updated in its place. The best swap is committed only if it strictly
// decreases the objective, after which the support is swept to convergence.
// Returns whether a swap was committed. The objective never increases.
bool local_search_swap(BlockState& state, const Problem& problem, const FitConfig& config);

struct AgisResult {
  std::vector<BlockState> models;  // snapshot per support size 1..k
  bool exhausted_early = false;    // fewer than k blocks had a positive score
};

// Grow the support one BGS-selected block at a time: update it, sweep the
// support to convergence, optionally run local search, snapshot.
AgisResult agis_fit(const Problem& problem, const FitConfig& config, std::size_t k,
                    bool local_search = true, bool iterate_local_search = false);

// Group-l0 block update: solve the FLSA with the sparsity term dropped, then
// zero the block unless its penalized-loss improvement over the zero block
// exceeds lambda_s.
void l0_block_update(BlockState& state, const Problem& problem, std::size_t k,
                     double lambda_f, double lambda_s);

struct GroupL0Result {
  BlockState state;
  double objective_l0 = 0.0;  // fused objective + lambda_s * |support|
};

// Cyclic sweeps of l0_block_update to convergence, interlaced with BGS local
// search, until neither phase improves the penalized objective.
GroupL0Result group_l0_fit(const Problem& problem, const FitConfig& config,
                           double lambda_s, bool local_search = true);

// Smallest lambda_s that zeroes every block on the first sweep (the largest
// single-block improvement from the zero state).
double lambda_s_max(const Problem& problem, const FitConfig& config);

// Descending exponential grid from lambda_max, for budget targeting.
std::vector<double> lambda_s_grid(double lambda_max, std::size_t points,
                                  double decay = 0.7);

double group_l0_objective(const BlockState& state, double lambda_f, double lambda_s);

}  // namespace pcam

#endif  // PCAM_SPARSITY_HPP
