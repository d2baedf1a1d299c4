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

#include "cam/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cam/error.hpp"

namespace cam {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> ParseNumber(std::string_view s) {
  s = Trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// RFC-4180 style: quoted fields may hold commas, newlines and "" escapes.
std::vector<std::vector<std::string>> SplitCsv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else if (c != '\r') {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kMalformed, "unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::string> SentinelsFor(const PreprocessConfig& config,
                                      const std::string& column) {
  auto it = config.column_sentinels.find(column);
  return it != config.column_sentinels.end() ? it->second
                                             : config.missing_sentinels;
}

bool MatchesSentinel(std::string_view cell,
                     const std::vector<std::string>& sentinels) {
  cell = Trim(cell);
  if (cell.empty()) return true;
  const auto num = ParseNumber(cell);
  for (const std::string& s : sentinels) {
    if (cell == Trim(s)) return true;
    if (num) {
      const auto sv = ParseNumber(s);
      if (sv && *sv == *num) return true;
    }
  }
  return false;
}

ColumnKind ParseColumnKind(const std::string& s) {
  if (s == "numeric") return ColumnKind::kNumeric;
  if (s == "categorical") return ColumnKind::kCategorical;
  throw Error(ErrorCode::kConfig, "unknown column kind '" + s + "'");
}

std::string ColumnKindName(ColumnKind k) {
  return k == ColumnKind::kNumeric ? "numeric" : "categorical";
}

}  // namespace

RawDataset RawDataset::Subset(std::span<const std::size_t> indices) const {
  RawDataset out;
  out.columns = columns;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(rows.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

PreprocessConfig PreprocessConfigFromJson(const nlohmann::json& j) {
  PreprocessConfig c;
  try {
    c.label_column = j.value("label_column", c.label_column);
    if (j.contains("positive_label") && !j.at("positive_label").is_null()) {
      c.positive_label = j.at("positive_label").get<std::string>();
    }
    c.features = j.value("features", c.features);
    if (j.contains("kinds")) {
      for (const auto& [name, kind] : j.at("kinds").items()) {
        c.kinds[name] = ParseColumnKind(kind.get<std::string>());
      }
    }
    if (j.contains("missing_sentinels")) {
      for (const auto& s : j.at("missing_sentinels")) {
        c.missing_sentinels.push_back(s.is_string() ? s.get<std::string>()
                                                    : s.dump());
      }
    }
    if (j.contains("column_sentinels")) {
      for (const auto& [name, list] : j.at("column_sentinels").items()) {
        auto& out = c.column_sentinels[name];
        for (const auto& s : list) {
          out.push_back(s.is_string() ? s.get<std::string>() : s.dump());
        }
      }
    }
    c.smoothing = j.value("smoothing", c.smoothing);
    c.one_hot_binned = j.value("one_hot_binned", c.one_hot_binned);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.seeds = j.value("seeds", c.seeds);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (c.smoothing < 0.0) {
    throw Error(ErrorCode::kConfig, "smoothing must be nonnegative");
  }
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "train_fraction must be in (0,1)");
  }
  return c;
}

nlohmann::json ToJson(const PreprocessConfig& c) {
  nlohmann::json kinds = nlohmann::json::object();
  for (const auto& [name, kind] : c.kinds) kinds[name] = ColumnKindName(kind);
  nlohmann::json j = {{"label_column", c.label_column},
                      {"features", c.features},
                      {"kinds", kinds},
                      {"missing_sentinels", c.missing_sentinels},
                      {"column_sentinels", c.column_sentinels},
                      {"smoothing", c.smoothing},
                      {"one_hot_binned", c.one_hot_binned},
                      {"train_fraction", c.train_fraction},
                      {"seeds", c.seeds}};
  j["positive_label"] =
      c.positive_label ? nlohmann::json(*c.positive_label) : nlohmann::json();
  return j;
}

RawDataset ParseCsv(std::string_view text, const PreprocessConfig& config,
                    bool require_label) {
  auto records = SplitCsv(text);
  if (records.empty()) throw Error(ErrorCode::kMalformed, "empty CSV");
  const std::vector<std::string>& header = records.front();
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (Trim(header[i]) == config.label_column) label_idx = i;
  }
  const bool has_label = label_idx != header.size();
  if (!has_label && require_label) {
    throw Error(ErrorCode::kLabel,
                "label column '" + config.label_column + "' not in header");
  }

  RawDataset data;
  std::vector<std::size_t> keep;
  if (config.features.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != label_idx) keep.push_back(i);
    }
  } else {
    for (const std::string& f : config.features) {
      auto it = std::find_if(header.begin(), header.end(),
                             [&](const std::string& h) { return Trim(h) == f; });
      if (it == header.end()) {
        throw Error(ErrorCode::kConfig, "feature '" + f + "' not in header");
      }
      keep.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  for (std::size_t i : keep) data.columns.emplace_back(Trim(header[i]));

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw Error(ErrorCode::kMalformed,
                  "row " + std::to_string(r) + " has " +
                      std::to_string(rec.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    const std::string_view cell = has_label ? Trim(rec[label_idx]) : "0";
    int label = 0;
    if (!has_label) {
      label = 0;
    } else if (config.positive_label) {
      label = cell == *config.positive_label ? 1 : 0;
    } else if (cell == "1" || cell == "1.0") {
      label = 1;
    } else if (cell == "0" || cell == "0.0") {
      label = 0;
    } else {
      throw Error(ErrorCode::kLabel, "non-binary label '" + std::string(cell) +
                                         "' at row " + std::to_string(r));
    }
    RawRow row;
    row.reserve(keep.size());
    for (std::size_t i : keep) row.emplace_back(Trim(rec[i]));
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

RawDataset ReadCsv(const std::string& path, const PreprocessConfig& config,
                   bool require_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCsv(ss.str(), config, require_label);
}

QuantileMap QuantileMap::Fit(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  QuantileMap q;
  const double n = static_cast<double>(values.size());
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    // Average rank of the tie block is (i + 1 + j) / 2; (rank - 0.5) / n.
    q.knots.push_back(values[i]);
    q.cdf.push_back((static_cast<double>(i) + 0.5 * static_cast<double>(j - i)) /
                    n);
    i = j;
  }
  return q;
}

double QuantileMap::operator()(double v) const {
  if (knots.empty()) return 0.5;
  if (std::isnan(v)) return 0.5;
  if (v < knots.front()) return 0.0;
  if (v > knots.back()) return 1.0;
  auto it = std::lower_bound(knots.begin(), knots.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - knots.begin());
  if (*it == v) return cdf[hi];
  const std::size_t lo = hi - 1;
  const double t = (v - knots[lo]) / (knots[hi] - knots[lo]);
  return std::clamp(cdf[lo] + t * (cdf[hi] - cdf[lo]), 0.0, 1.0);
}

bool ColumnTransform::IsMissing(std::string_view cell) const {
  return MatchesSentinel(cell, sentinels);
}

double ColumnTransform::Encode(std::string_view cell) const {
  if (IsMissing(cell)) {
    return kind == ColumnKind::kNumeric ? mean : prior;
  }
  if (kind == ColumnKind::kNumeric) {
    const auto v = ParseNumber(cell);
    if (!v) {
      throw Error(ErrorCode::kMalformed, "non-numeric value '" +
                                             std::string(cell) +
                                             "' in column " + name);
    }
    return *v;
  }
  auto it = encoding.find(std::string(Trim(cell)));
  if (it == encoding.end()) {
    spdlog::info("column {}: unseen category '{}' mapped to prior {}", name,
                 cell, prior);
    return prior;
  }
  return it->second;
}

std::vector<std::string> PreprocessModel::FeatureNames() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::size_t PreprocessModel::FindColumn(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw Error(ErrorCode::kNotFound, "unknown column '" + std::string(name) + "'");
}

std::vector<double> PreprocessModel::Apply(const RawRow& row) const {
  std::size_t width = 0;
  for (std::size_t s : source_index) width = std::max(width, s + 1);
  if (row.size() < width) {
    throw Error(ErrorCode::kMisaligned,
                "row has " + std::to_string(row.size()) +
                    " cells, model needs " + std::to_string(width));
  }
  std::vector<double> x(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    x[i] = columns[i].Apply(row[source_index[i]]);
  }
  return x;
}

Matrix PreprocessModel::Apply(const RawDataset& data) const {
  Matrix m(data.size(), columns.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto x = Apply(data.rows[r]);
    std::copy(x.begin(), x.end(), m.row(r).begin());
  }
  return m;
}

bool IsEmptyRow(const RawRow& row, const PreprocessConfig& config,
                const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < row.size() && i < columns.size(); ++i) {
    if (!MatchesSentinel(row[i], SentinelsFor(config, columns[i]))) {
      return false;
    }
  }
  return true;
}

RawDataset DropEmptyRows(const RawDataset& data,
                         const PreprocessConfig& config) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!IsEmptyRow(data.rows[r], config, data.columns)) keep.push_back(r);
  }
  return data.Subset(keep);
}

PreprocessModel Fit(const RawDataset& raw_train,
                    const PreprocessConfig& config) {
  if (config.one_hot_binned) {
    throw Error(ErrorCode::kConfig,
                "one_hot_binned is reserved and not implemented");
  }
  if (raw_train.labels.size() != raw_train.rows.size()) {
    throw Error(ErrorCode::kLabel, "labels and rows differ in length");
  }
  for (int y : raw_train.labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kLabel, "non-binary label");
  }
  const RawDataset train = DropEmptyRows(raw_train, config);
  if (train.size() == 0) {
    throw Error(ErrorCode::kUnfittableColumn, "training split is empty");
  }
  for (const RawRow& row : train.rows) {
    if (row.size() != train.columns.size()) {
      throw Error(ErrorCode::kMisaligned, "ragged training rows");
    }
  }

  double positives = 0.0;
  for (int y : train.labels) positives += y;
  const double prior = positives / static_cast<double>(train.size());

  PreprocessModel model;
  for (std::size_t c = 0; c < train.columns.size(); ++c) {
    ColumnTransform t;
    t.name = train.columns[c];
    t.sentinels = SentinelsFor(config, t.name);
    t.prior = prior;

    std::vector<std::string_view> present;
    std::vector<int> present_labels;
    for (std::size_t r = 0; r < train.size(); ++r) {
      if (!MatchesSentinel(train.rows[r][c], t.sentinels)) {
        present.push_back(Trim(train.rows[r][c]));
        present_labels.push_back(train.labels[r]);
      }
    }
    if (present.empty()) {
      throw Error(ErrorCode::kUnfittableColumn,
                  "column '" + t.name + "' has no non-missing values");
    }

    if (auto it = config.kinds.find(t.name); it != config.kinds.end()) {
      t.kind = it->second;
    } else {
      t.kind = std::all_of(present.begin(), present.end(),
                           [](std::string_view s) {
                             return ParseNumber(s).has_value();
                           })
                   ? ColumnKind::kNumeric
                   : ColumnKind::kCategorical;
    }

    if (t.kind == ColumnKind::kNumeric) {
      double sum = 0.0;
      for (std::string_view s : present) {
        const auto v = ParseNumber(s);
        if (!v) {
          throw Error(ErrorCode::kMalformed, "non-numeric value '" +
                                                 std::string(s) +
                                                 "' in numeric column " +
                                                 t.name);
        }
        sum += *v;
      }
      t.mean = sum / static_cast<double>(present.size());
    } else {
      std::map<std::string, std::pair<double, double>> counts;  // pos, total
      for (std::size_t i = 0; i < present.size(); ++i) {
        auto& [pos, total] = counts[std::string(present[i])];
        pos += present_labels[i];
        total += 1.0;
      }
      for (const auto& [cat, pt] : counts) {
        t.encoding[cat] = (pt.first + config.smoothing * prior) /
                          (pt.second + config.smoothing);
      }
    }

    std::vector<double> encoded;
    encoded.reserve(train.size());
    for (const RawRow& row : train.rows) encoded.push_back(t.Encode(row[c]));
    t.quantiles = QuantileMap::Fit(std::move(encoded));

    model.columns.push_back(std::move(t));
    model.source_index.push_back(c);
  }
  return model;
}

nlohmann::json ToJson(const PreprocessModel& model) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < model.columns.size(); ++i) {
    const ColumnTransform& t = model.columns[i];
    nlohmann::json j = {{"name", t.name},
                        {"kind", ColumnKindName(t.kind)},
                        {"source_index", model.source_index[i]},
                        {"sentinels", t.sentinels},
                        {"prior", t.prior},
                        {"knots", t.quantiles.knots},
                        {"cdf", t.quantiles.cdf}};
    if (t.kind == ColumnKind::kNumeric) {
      j["mean"] = t.mean;
    } else {
      j["encoding"] = t.encoding;
    }
    cols.push_back(std::move(j));
  }
  return {{"columns", std::move(cols)}};
}

PreprocessModel PreprocessModelFromJson(const nlohmann::json& j) {
  PreprocessModel model;
  try {
    for (const auto& c : j.at("columns")) {
      ColumnTransform t;
      t.name = c.at("name").get<std::string>();
      t.kind = ParseColumnKind(c.at("kind").get<std::string>());
      t.sentinels = c.at("sentinels").get<std::vector<std::string>>();
      t.prior = c.at("prior").get<double>();
      t.quantiles.knots = c.at("knots").get<std::vector<double>>();
      t.quantiles.cdf = c.at("cdf").get<std::vector<double>>();
      if (t.quantiles.knots.size() != t.quantiles.cdf.size() ||
          !std::is_sorted(t.quantiles.knots.begin(), t.quantiles.knots.end())) {
        throw Error(ErrorCode::kSchema, "bad quantile knots for " + t.name);
      }
      if (t.kind == ColumnKind::kNumeric) {
        t.mean = c.at("mean").get<double>();
      } else {
        t.encoding = c.at("encoding").get<std::map<std::string, double>>();
      }
      model.source_index.push_back(c.at("source_index").get<std::size_t>());
      model.columns.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, e.what());
  }
  return model;
}

Split SplitIndices(std::size_t n, std::uint64_t seed, double train_fraction) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * train_fraction));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.eval.assign(idx.begin() + static_cast<long>(n_train), idx.end());
  return s;
}

}  // namespace cam
