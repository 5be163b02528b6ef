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
#include "pcam/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pcam/errors.hpp"

namespace pcam {

namespace {

// Shortest representation that parses back to the identical double.
std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string quote_identifier(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

struct Segment {
  double level;
  double min_value;
  double max_value;
};

// Merge adjacent bins with exactly equal levels. The DP backtrace assigns
// fused bins the identical double, so equality is the right merge test.
std::vector<Segment> merge_bins(const std::vector<double>& levels,
                                const FeatureBins& bins) {
  std::vector<Segment> segments;
  for (std::size_t b = 0; b < levels.size(); ++b) {
    if (!segments.empty() && segments.back().level == levels[b]) {
      segments.back().max_value = bins.max_value[b];
    } else {
      segments.push_back({levels[b], bins.min_value[b], bins.max_value[b]});
    }
  }
  return segments;
}

}  // namespace

double ShapeFunction::evaluate(double value) const {
  // Index = number of thresholds <= value (half-open [t, next) segments).
  const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), value);
  return levels[static_cast<std::size_t>(it - thresholds.begin())];
}

PCAModel extract_model(const BlockState& state, const Problem& problem, double lambda_f,
                       const std::string& sparsity_mode) {
  PCAModel model;
  model.lambda_f = lambda_f;
  model.max_bins = problem.bins.max_bins;
  model.sparsity_mode = sparsity_mode;
  model.train_rows = problem.n_rows();
  model.train_cols = problem.n_features();

  double intercept = problem.y_mean;
  for (std::size_t j = 0; j < problem.n_features(); ++j) {
    const FeatureBins& bins = problem.bins.features[j];
    auto segments = merge_bins(state.beta[j], bins);
    if (segments.size() == 1) {
      // Flat contribution folds into the intercept exactly.
      intercept += segments[0].level;
      continue;
    }
    // Center levels by the bin-count-weighted mean; the mean moves to the
    // intercept and no prediction changes.
    double weighted = 0.0;
    for (std::size_t b = 0; b < bins.n_bins(); ++b) {
      weighted += bins.count[b] * state.beta[j][b];
    }
    const double mean = weighted / static_cast<double>(problem.n_rows());
    intercept += mean;

    ShapeFunction shape;
    shape.feature_name = problem.data->feature_names[j];
    shape.levels.reserve(segments.size());
    for (const Segment& seg : segments) shape.levels.push_back(seg.level - mean);
    // Centering cannot collapse two distinct levels except by extreme
    // cancellation; re-merge to keep the representation maximal.
    for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
      const double left_max = segments[s].max_value;
      const double right_min = segments[s + 1].min_value;
      double threshold = 0.5 * (left_max + right_min);
      if (!(threshold > left_max)) threshold = right_min;
      shape.thresholds.push_back(threshold);
    }
    for (std::size_t s = 0; s + 1 < shape.levels.size();) {
      if (shape.levels[s] == shape.levels[s + 1]) {
        shape.levels.erase(shape.levels.begin() + static_cast<std::ptrdiff_t>(s) + 1);
        shape.thresholds.erase(shape.thresholds.begin() + static_cast<std::ptrdiff_t>(s));
      } else {
        ++s;
      }
    }
    if (shape.levels.size() >= 2) model.shapes.push_back(std::move(shape));
  }
  model.intercept = intercept;
  return model;
}

double predict(const PCAModel& model, const std::map<std::string, double>& row) {
  double out = model.intercept;
  for (const ShapeFunction& shape : model.shapes) {
    const auto it = row.find(shape.feature_name);
    if (it == row.end()) {
      throw DataError("predict: row is missing feature '" + shape.feature_name + "'");
    }
    if (!std::isfinite(it->second)) {
      throw DataError("predict: non-finite value for feature '" + shape.feature_name + "'");
    }
    out += shape.evaluate(it->second);
  }
  return out;
}

std::vector<double> predict(const PCAModel& model, const Dataset& data) {
  std::vector<const std::vector<double>*> shape_columns;
  shape_columns.reserve(model.shapes.size());
  for (const ShapeFunction& shape : model.shapes) {
    const auto it = std::find(data.feature_names.begin(), data.feature_names.end(),
                              shape.feature_name);
    if (it == data.feature_names.end()) {
      throw DataError("predict: data is missing feature '" + shape.feature_name + "'");
    }
    shape_columns.push_back(
        &data.columns[static_cast<std::size_t>(it - data.feature_names.begin())]);
  }
  std::vector<double> out(data.n_rows(), model.intercept);
  for (std::size_t s = 0; s < model.shapes.size(); ++s) {
    const ShapeFunction& shape = model.shapes[s];
    const std::vector<double>& col = *shape_columns[s];
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!std::isfinite(col[i])) {
        throw DataError("predict: non-finite value for feature '" + shape.feature_name +
                        "'");
      }
      out[i] += shape.evaluate(col[i]);
    }
  }
  return out;
}

std::string serialize(const PCAModel& model) {
  nlohmann::json doc;
  doc["format_version"] = PCAModel::kFormatVersion;
  doc["intercept"] = model.intercept;
  doc["lambda_f"] = model.lambda_f;
  doc["max_bins"] = model.max_bins;
  doc["sparsity_mode"] = model.sparsity_mode;
  doc["train_rows"] = model.train_rows;
  doc["train_cols"] = model.train_cols;
  doc["shapes"] = nlohmann::json::array();
  for (const ShapeFunction& shape : model.shapes) {
    doc["shapes"].push_back({{"feature", shape.feature_name},
                             {"thresholds", shape.thresholds},
                             {"levels", shape.levels}});
  }
  return doc.dump(2) + "\n";
}

PCAModel deserialize(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (!doc.contains("format_version") ||
        doc.at("format_version").get<int>() != PCAModel::kFormatVersion) {
      throw ModelFormatError("unsupported model format version");
    }
    if (!doc.contains("intercept")) throw ModelFormatError("model document lacks intercept");
    PCAModel model;
    model.intercept = doc.at("intercept").get<double>();
    model.lambda_f = doc.value("lambda_f", 0.0);
    model.max_bins = doc.value("max_bins", std::size_t{0});
    model.sparsity_mode = doc.value("sparsity_mode", std::string("none"));
    model.train_rows = doc.value("train_rows", std::size_t{0});
    model.train_cols = doc.value("train_cols", std::size_t{0});
    for (const auto& item : doc.value("shapes", nlohmann::json::array())) {
      ShapeFunction shape;
      shape.feature_name = item.at("feature").get<std::string>();
      shape.thresholds = item.at("thresholds").get<std::vector<double>>();
      shape.levels = item.at("levels").get<std::vector<double>>();
      if (shape.levels.size() != shape.thresholds.size() + 1) {
        throw ModelFormatError("shape '" + shape.feature_name +
                               "': levels must be one longer than thresholds");
      }
      for (std::size_t t = 1; t < shape.thresholds.size(); ++t) {
        if (!(shape.thresholds[t] > shape.thresholds[t - 1])) {
          throw ModelFormatError("shape '" + shape.feature_name +
                                 "': thresholds must be strictly increasing");
        }
      }
      for (double v : shape.thresholds) {
        if (!std::isfinite(v)) throw ModelFormatError("non-finite threshold");
      }
      for (double v : shape.levels) {
        if (!std::isfinite(v)) throw ModelFormatError("non-finite level");
      }
      model.shapes.push_back(std::move(shape));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const PCAModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize(model);
  if (!out) throw DataError("failed writing model file: " + path);
}

PCAModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  std::string document((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  return deserialize(document);
}

std::string export_sql(const PCAModel& model, const std::string& input_table,
                       const std::map<std::string, std::string>& column_names) {
  const auto column_for = [&](const std::string& feature) {
    if (column_names.empty()) return quote_identifier(feature);
    const auto it = column_names.find(feature);
    if (it == column_names.end()) {
      throw DataError("export_sql: no column mapping for feature '" + feature + "'");
    }
    return quote_identifier(it->second);
  };

  std::string sql = "SELECT\n  " + format_double(model.intercept);
  for (const ShapeFunction& shape : model.shapes) {
    if (shape.thresholds.empty()) {  // constant shape, no CASE needed
      sql += "\n  + " + format_double(shape.levels.back());
      continue;
    }
    const std::string col = column_for(shape.feature_name);
    sql += "\n  + CASE";
    for (std::size_t t = 0; t < shape.thresholds.size(); ++t) {
      sql += " WHEN " + col + " < " + format_double(shape.thresholds[t]) + " THEN " +
             format_double(shape.levels[t]);
    }
    sql += " ELSE " + format_double(shape.levels.back()) + " END";
  }
  sql += "\n  AS prediction\nFROM " + input_table + ";\n";
  return sql;
}

}  // namespace pcam
