/*
 * Copyright 2026 The CAM Authors.
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

// Dataset ingestion and the per-column transforms that map raw records into
// the unit cube. Missing numbers take the training mean and categories are
// target encoded with smoothing. Every column then goes through a mid-rank
// empirical-CDF quantile map.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cam/matrix.hpp"
#include "json.hpp"

namespace cam {

// A raw record keeps every cell as text; an empty cell is missing.
using RawRow = std::vector<std::string>;

struct RawDataset {
  std::vector<std::string> columns;
  std::vector<RawRow> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  RawDataset Subset(std::span<const std::size_t> indices) const;
};

enum class ColumnKind { kNumeric, kCategorical };

struct PreprocessConfig {
  std::string label_column = "label";
  // When set, label = (cell == positive_label); otherwise cells must be 0/1.
  std::optional<std::string> positive_label;
  // Feature columns in order. Empty means every non-label column.
  std::vector<std::string> features;
  // Columns not listed here are inferred: numeric iff every non-missing cell
  // parses as a number.
  std::map<std::string, ColumnKind> kinds;
  std::vector<std::string> missing_sentinels;
  std::map<std::string, std::vector<std::string>> column_sentinels;
  double smoothing = 10.0;
  // Reserved; binned one-hot leaves are not implemented.
  bool one_hot_binned = false;
  double train_fraction = 0.8;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

PreprocessConfig PreprocessConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PreprocessConfig& config);

// Reads a headered CSV. The label column is split off into `labels`; all
// other columns are kept in file order. With require_label=false a file
// without the label column loads with every label 0.
RawDataset ReadCsv(const std::string& path, const PreprocessConfig& config,
                   bool require_label = true);
RawDataset ParseCsv(std::string_view text, const PreprocessConfig& config,
                    bool require_label = true);

// Mid-rank empirical CDF over the distinct training values with linear
// interpolation in between. Below the first knot maps to 0, above the last to 1.
struct QuantileMap {
  std::vector<double> knots;
  std::vector<double> cdf;

  static QuantileMap Fit(std::vector<double> values);
  double operator()(double v) const;
};

struct ColumnTransform {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<std::string> sentinels;
  double mean = 0.0;
  std::map<std::string, double> encoding;
  double prior = 0.0;
  QuantileMap quantiles;

  bool IsMissing(std::string_view cell) const;
  // Raw cell to the pre-quantile scale: imputed number or encoded category.
  double Encode(std::string_view cell) const;
  double Apply(std::string_view cell) const { return quantiles(Encode(cell)); }
};

struct PreprocessModel {
  std::vector<ColumnTransform> columns;
  // Dataset column index feeding each transform.
  std::vector<std::size_t> source_index;

  std::vector<std::string> FeatureNames() const;
  // Throws kMisaligned when the row has the wrong arity.
  std::vector<double> Apply(const RawRow& row) const;
  Matrix Apply(const RawDataset& data) const;
  std::size_t FindColumn(std::string_view name) const;
};

// True when every feature cell of the row is missing.
bool IsEmptyRow(const RawRow& row, const PreprocessConfig& config,
                const std::vector<std::string>& columns);
RawDataset DropEmptyRows(const RawDataset& data,
                         const PreprocessConfig& config);

// Fits on the training split only. Entirely-empty rows are ignored. Throws
// kUnfittableColumn for a column with no values and kConfig for reserved
// options.
PreprocessModel Fit(const RawDataset& train, const PreprocessConfig& config);

nlohmann::json ToJson(const PreprocessModel& model);
PreprocessModel PreprocessModelFromJson(const nlohmann::json& j);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

// Seeded Fisher-Yates shuffle, first round(n * train_fraction) rows train.
Split SplitIndices(std::size_t n, std::uint64_t seed, double train_fraction);

}  // namespace cam
