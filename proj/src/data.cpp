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
#include "pcam/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Parses a finite double; returns nullopt for empty, malformed, or non-finite
// cells so the missing policy can decide.
std::optional<double> parse_cell(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_name,
                 MissingPolicy policy, std::size_t* rows_dropped) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const auto raw_header = split_line(line);
  std::vector<std::string> header;
  header.reserve(raw_header.size());
  for (const auto& h : raw_header) header.emplace_back(trim(h));
  if (header.empty()) throw DataError("missing header row: " + path);

  std::ptrdiff_t target_col = -1;
  if (!target_name.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == target_name) {
        target_col = static_cast<std::ptrdiff_t>(j);
        break;
      }
    }
    if (target_col < 0) {
      throw DataError("target column '" + target_name + "' not found in " + path);
    }
  }

  Dataset out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != target_col) out.feature_names.push_back(header[j]);
  }
  out.columns.resize(out.feature_names.size());

  std::size_t dropped = 0;
  std::size_t line_no = 1;
  std::vector<double> row(header.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    bool ok = true;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto value = parse_cell(cells[j]);
      if (!value) {
        if (policy == MissingPolicy::kError) {
          throw DataError("row " + std::to_string(line_no) + ", column '" + header[j] +
                          "': cannot parse '" + cells[j] + "' as a finite number");
        }
        ok = false;
        break;
      }
      row[j] = *value;
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    std::size_t feature = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == target_col) {
        out.target.push_back(row[j]);
      } else {
        out.columns[feature++].push_back(row[j]);
      }
    }
  }
  if (rows_dropped) *rows_dropped = dropped;
  if (out.n_features() == 0) throw DataError("no feature columns in " + path);
  return out;
}

void validate_for_fit(const Dataset& data) {
  if (data.n_features() < 1) throw DataError("dataset needs at least one feature");
  if (data.n_rows() < 2) throw DataError("dataset needs at least two rows");
  if (data.target.size() != data.n_rows()) {
    throw DataError("target length does not match row count");
  }
  for (const auto& col : data.columns) {
    if (col.size() != data.n_rows()) throw DataError("ragged feature column");
    for (double v : col) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
  }
  for (double y : data.target) {
    if (!std::isfinite(y)) throw DataError("non-finite target value");
  }
}

SortedIndex build_sorted_index(const Dataset& data) {
  SortedIndex index;
  index.order.resize(data.n_features());
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    auto& order = index.order[j];
    order.resize(data.n_rows());
    std::iota(order.begin(), order.end(), 0u);
    const auto& col = data.columns[j];
    std::stable_sort(order.begin(), order.end(),
                     [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return index;
}

BinMap build_bins(const Dataset& data, const SortedIndex& index, std::size_t max_bins) {
  if (max_bins < 2) throw std::invalid_argument("build_bins: max_bins must be >= 2");
  const std::size_t n = data.n_rows();
  BinMap map;
  map.max_bins = max_bins;
  map.features.resize(data.n_features());
  const std::size_t target_rows = (n + max_bins - 1) / max_bins;

  for (std::size_t j = 0; j < data.n_features(); ++j) {
    const auto& col = data.columns[j];
    const auto& order = index.order[j];
    FeatureBins& bins = map.features[j];
    bins.row_to_bin.resize(n);

    // Group the sorted column into runs of equal values, then pack runs into
    // bins of at least target_rows rows. Runs are never split, so ties share
    // a bin. If there are few distinct values every run gets its own bin.
    std::size_t distinct = 1;
    for (std::size_t r = 1; r < n; ++r) {
      if (col[order[r]] != col[order[r - 1]]) ++distinct;
    }
    const bool one_bin_per_value = distinct <= max_bins;

    std::size_t bin = 0;
    std::size_t in_bin = 0;
    std::size_t r = 0;
    while (r < n) {
      // Extent of the current run of equal values.
      std::size_t run_end = r + 1;
      while (run_end < n && col[order[run_end]] == col[order[r]]) ++run_end;
      if (in_bin == 0) {
        bins.min_value.push_back(col[order[r]]);
        bins.count.push_back(0.0);
        bins.max_value.push_back(col[order[r]]);
      }
      for (std::size_t i = r; i < run_end; ++i) {
        bins.row_to_bin[order[i]] = static_cast<std::uint32_t>(bin);
      }
      bins.count[bin] += static_cast<double>(run_end - r);
      bins.max_value[bin] = col[order[r]];
      in_bin += run_end - r;
      r = run_end;
      if (one_bin_per_value || in_bin >= target_rows) {
        ++bin;
        in_bin = 0;
      }
    }
    const std::size_t n_bins = bins.count.size();
    if (n_bins > max_bins && !one_bin_per_value) {
      throw std::logic_error("build_bins: bin overflow");  // unreachable by construction
    }
  }
  return map;
}

WeightedSignal aggregate_residual(const std::vector<double>& residual,
                                  const FeatureBins& bins) {
  WeightedSignal signal;
  signal.values.assign(bins.n_bins(), 0.0);
  signal.weights = bins.count;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    signal.values[bins.row_to_bin[i]] += residual[i];
  }
  for (std::size_t b = 0; b < signal.values.size(); ++b) {
    signal.values[b] /= signal.weights[b];
  }
  return signal;
}

}  // namespace pcam
