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
#ifndef PCAM_ACCUM_HPP
#define PCAM_ACCUM_HPP

#include <cmath>
#include <cstddef>
#include <span>

namespace pcam {

// Neumaier-compensated accumulator. Objective traces are asserted monotone to
// 1e-12, which naive summation over n rows cannot guarantee.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  Accumulator acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

inline double compensated_squared_norm(std::span<const double> xs) {
  Accumulator acc;
  for (double x : xs) acc.add(x * x);
  return acc.value();
}

}  // namespace pcam

#endif  // PCAM_ACCUM_HPP
