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
#ifndef PCAM_DATA_HPP
#define PCAM_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcam/flsa.hpp"

namespace pcam {

// Column-major numeric table. Immutable once built; safe to share across
// concurrent readers.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> columns;  // p columns, each length n
  std::vector<double> target;                // length n (empty for inference frames)

  std::size_t n_rows() const { return columns.empty() ? 0 : columns[0].size(); }
  std::size_t n_features() const { return columns.size(); }
};

enum class MissingPolicy {
  kError,    // any unparsable or missing cell aborts loading
  kDropRow,  // rows with such cells are skipped
};

// Loads a UTF-8, comma-separated file with a mandatory header row. All cells
// must parse as numbers (scientific notation accepted). The target column is
// extracted; remaining columns become features in header order. When
// target_name is empty no target is extracted (inference frame). rows_dropped,
// if given, receives the number of rows removed under kDropRow.
Dataset load_csv(const std::string& path, const std::string& target_name,
                 MissingPolicy policy = MissingPolicy::kError,
                 std::size_t* rows_dropped = nullptr);

// Throws DataError unless n >= 2, p >= 1, and every value is finite.
void validate_for_fit(const Dataset& data);

// Per-feature stable ascending sort permutation; ties keep original row order.
struct SortedIndex {
  std::vector<std::vector<std::uint32_t>> order;  // order[j][rank] = row index
};

SortedIndex build_sorted_index(const Dataset& data);

// Ordered bins for one feature. Rows with equal values always share a bin, so
// bin value ranges are disjoint and increasing.
struct FeatureBins {
  std::vector<std::uint32_t> row_to_bin;  // length n
  std::vector<double> count;              // rows per bin, as double
  std::vector<double> min_value;          // smallest training value in each bin
  std::vector<double> max_value;          // largest training value in each bin

  std::size_t n_bins() const { return count.size(); }
};

struct BinMap {
  std::vector<FeatureBins> features;
  std::size_t max_bins = 0;
};

// Quantile binning targeting ceil(n / max_bins) rows per bin without ever
// splitting equal values. Features with at most max_bins distinct values get
// one bin per distinct value.
BinMap build_bins(const Dataset& data, const SortedIndex& index, std::size_t max_bins);

// Per-bin means of the residual with bin counts as weights, in bin order.
WeightedSignal aggregate_residual(const std::vector<double>& residual,
                                  const FeatureBins& bins);

}  // namespace pcam

#endif  // PCAM_DATA_HPP
