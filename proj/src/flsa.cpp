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
#include "pcam/flsa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcam/accum.hpp"

namespace pcam {

void validate(const WeightedSignal& signal) {
  if (signal.values.empty()) {
    throw std::invalid_argument("flsa: signal must have at least one entry");
  }
  if (signal.values.size() != signal.weights.size()) {
    throw std::invalid_argument("flsa: values and weights lengths differ");
  }
  for (double v : signal.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("flsa: non-finite value");
  }
  for (double w : signal.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("flsa: weights must be strictly positive");
    }
  }
}

// Weighted variant of the dynamic program of Johnson (2013), in the
// derivative-breakpoint form used by the glmgen family of solvers. The sweep
// maintains the derivative of the clamped message as a piecewise-linear
// function: knots x[l..r] with slope/offset increments (a, c). Clamping the
// derivative to [-lambda, lambda] bounds the active window, so a 2B buffer
// suffices. The reverse pass clamps each coefficient to its knot interval.
std::vector<double> solve_flsa(const WeightedSignal& signal, double lambda_f) {
  validate(signal);
  if (!(lambda_f >= 0.0) || !std::isfinite(lambda_f)) {
    throw std::invalid_argument("flsa: lambda_f must be a finite nonnegative real");
  }
  const std::vector<double>& v = signal.values;
  const std::vector<double>& w = signal.weights;
  const std::ptrdiff_t b = static_cast<std::ptrdiff_t>(v.size());
  if (b == 1 || lambda_f == 0.0) return v;

  std::vector<double> x(2 * b), a(2 * b), c(2 * b);
  std::vector<double> lo_knot(b - 1), hi_knot(b - 1);

  // First data point handled explicitly: its derivative is w0*(beta - v0),
  // clamped where it leaves [-lambda, lambda].
  lo_knot[0] = v[0] - lambda_f / w[0];
  hi_knot[0] = v[0] + lambda_f / w[0];
  std::ptrdiff_t l = b - 1;
  std::ptrdiff_t r = b;
  x[l] = lo_knot[0];
  x[r] = hi_knot[0];
  a[l] = w[0];
  c[l] = -w[0] * v[0] + lambda_f;
  a[r] = -w[0];
  c[r] = w[0] * v[0] + lambda_f;
  double a_first = w[1];
  double c_first = -w[1] * v[1] - lambda_f;
  double a_last = -w[1];
  double c_last = w[1] * v[1] - lambda_f;

  for (std::ptrdiff_t k = 1; k < b - 1; ++k) {
    // Walk up from the left until the derivative exceeds -lambda.
    double alo = a_first;
    double clo = c_first;
    std::ptrdiff_t lo = l;
    for (; lo <= r; ++lo) {
      if (alo * x[lo] + clo > -lambda_f) break;
      alo += a[lo];
      clo += c[lo];
    }
    // Walk down from the right until the derivative drops below lambda.
    double ahi = a_last;
    double chi = c_last;
    std::ptrdiff_t hi = r;
    for (; hi >= lo; --hi) {
      if (-ahi * x[hi] - chi < lambda_f) break;
      ahi += a[hi];
      chi += c[hi];
    }

    lo_knot[k] = (-lambda_f - clo) / alo;
    l = lo - 1;
    x[l] = lo_knot[k];

    hi_knot[k] = (lambda_f + chi) / (-ahi);
    r = hi + 1;
    x[r] = hi_knot[k];

    a[l] = alo;
    c[l] = clo + lambda_f;
    a[r] = ahi;
    c[r] = chi + lambda_f;
    a_first = w[k + 1];
    c_first = -w[k + 1] * v[k + 1] - lambda_f;
    a_last = -w[k + 1];
    c_last = w[k + 1] * v[k + 1] - lambda_f;
  }

  // Last coefficient sits where the final derivative vanishes.
  double alo = a_first;
  double clo = c_first;
  for (std::ptrdiff_t lo = l; lo <= r; ++lo) {
    if (alo * x[lo] + clo > 0.0) break;
    alo += a[lo];
    clo += c[lo];
  }
  std::vector<double> beta(b);
  beta[b - 1] = -clo / alo;
  for (std::ptrdiff_t k = b - 2; k >= 0; --k) {
    beta[k] = std::clamp(beta[k + 1], lo_knot[k], hi_knot[k]);
  }
  return beta;
}

double total_variation(const std::vector<double>& beta) {
  Accumulator acc;
  for (std::size_t i = 1; i < beta.size(); ++i) {
    acc.add(std::abs(beta[i] - beta[i - 1]));
  }
  return acc.value();
}

double flsa_objective(const WeightedSignal& signal, const std::vector<double>& beta,
                      double lambda_f) {
  validate(signal);
  if (beta.size() != signal.size()) {
    throw std::invalid_argument("flsa_objective: beta length mismatch");
  }
  Accumulator acc;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double d = signal.values[i] - beta[i];
    acc.add(0.5 * signal.weights[i] * d * d);
  }
  return acc.value() + lambda_f * total_variation(beta);
}

}  // namespace pcam
