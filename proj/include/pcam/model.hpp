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
#ifndef PCAM_MODEL_HPP
#define PCAM_MODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "pcam/optimizer.hpp"

namespace pcam {

// A step function: m segments separated by m-1 strictly increasing
// thresholds. Segments are half-open [t, next); values below the first
// threshold take levels[0], values at or above the last take levels.back().
// Adjacent levels always differ (maximally merged).
struct ShapeFunction {
  std::string feature_name;
  std::vector<double> thresholds;
  std::vector<double> levels;

  double evaluate(double value) const;
};

struct PCAModel {
  static constexpr int kFormatVersion = 1;

  double intercept = 0.0;
  std::vector<ShapeFunction> shapes;  // only features with a nonzero shape

  // Fit metadata.
  double lambda_f = 0.0;
  std::size_t max_bins = 0;
  std::string sparsity_mode = "none";
  std::size_t train_rows = 0;
  std::size_t train_cols = 0;
};

// Converts a fitted state into the portable step-function form: bin levels
// are weighted-mean-centered per feature (the mean folds into the intercept;
// the fusion penalty and all predictions are unchanged), adjacent equal-level
// bins merge, and each threshold is the midpoint between the largest training
// value on its left and the smallest on its right.
PCAModel extract_model(const BlockState& state, const Problem& problem, double lambda_f,
                       const std::string& sparsity_mode = "none");

// Prediction for one row; throws DataError if a shape feature is missing from
// the row or its value is non-finite.
double predict(const PCAModel& model, const std::map<std::string, double>& row);

// Batch prediction over a column table. Every shape feature must be present.
std::vector<double> predict(const PCAModel& model, const Dataset& data);

std::string serialize(const PCAModel& model);
PCAModel deserialize(const std::string& document);

void save_model(const PCAModel& model, const std::string& path);
PCAModel load_model(const std::string& path);

// A single ANSI-SQL SELECT computing the model prediction: the intercept plus
// one CASE chain per shape, matching predict()'s half-open convention.
// column_names maps feature names to SQL columns; identity when empty.
std::string export_sql(const PCAModel& model, const std::string& input_table,
                       const std::map<std::string, std::string>& column_names = {});

}  // namespace pcam

#endif  // PCAM_MODEL_HPP
