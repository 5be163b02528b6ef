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
#ifndef PCAM_FLSA_HPP
#define PCAM_FLSA_HPP

#include <vector>

namespace pcam {

// A length-B signal with strictly positive per-entry weights. In the fitting
// engine the values are per-bin residual means and the weights are bin row
// counts, but the solver below works for any valid pair.
struct WeightedSignal {
  std::vector<double> values;
  std::vector<double> weights;

  std::size_t size() const { return values.size(); }
};

// Throws std::invalid_argument if the signal is empty, lengths mismatch,
// a value is non-finite, or a weight is not strictly positive.
void validate(const WeightedSignal& signal);

// Exact minimizer of
//   sum_b w_b/2 (v_b - beta_b)^2 + lambda_f * sum_b |beta_{b+1} - beta_b|
// computed with a weighted dynamic program over clamped piecewise-quadratic
// messages. The derivative of each message is piecewise linear; it is stored
// as a breakpoint list whose active window stays within a 2B buffer because
// clamping at +-lambda_f discards everything outside the window. O(B)
// amortized.
std::vector<double> solve_flsa(const WeightedSignal& signal, double lambda_f);

// Objective value of a candidate, sum_b w_b/2 (v_b - beta_b)^2 + lambda_f * TV(beta).
double flsa_objective(const WeightedSignal& signal, const std::vector<double>& beta,
                      double lambda_f);

// Total variation sum_b |beta_{b+1} - beta_b| of a coefficient vector.
double total_variation(const std::vector<double>& beta);

}  // namespace pcam

#endif  // PCAM_FLSA_HPP
