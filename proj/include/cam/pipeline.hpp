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

// The construction loop. Each round fits the current frontier once (the org
// model) and fits every mined candidate field-wise against that same fit.
// Candidates that do not lower the evaluation AUC are integrated before the
// top layer is retrained. The loop stops when a round keeps nothing.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cam/learner.hpp"
#include "cam/preprocess.hpp"
#include "cam/qaf.hpp"
#include "cam/semantic.hpp"
#include "json.hpp"

namespace cam {

struct PipelineConfig {
  PreprocessConfig preprocess;
  TrainConfig train;
  double threshold = kDefaultGroupingThreshold;
  int max_rounds = 5;
  std::string root_id = "c_g";
  std::string root_label = "Global";
  LabelMap labels;
};

PipelineConfig PipelineConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PipelineConfig& config);

struct CandidateReport {
  std::string id;
  std::pair<std::string, std::string> children;
  double similarity = 0.0;
  // One child is a concept and the other a feature.
  bool mixed = false;
  double auc_candidate = 0.0;
  double auc_org = 0.0;
  bool keep = false;
  // Kept and integrated into the consolidated model.
  bool admitted = false;
  std::string note;
  double w_c = 0.0;
  double w_left = 0.0;
  double w_right = 0.0;
  double b_c = 0.0;
  OptimizerTrace trace;
};

struct RoundReport {
  int round = 0;
  std::vector<std::string> frontier;
  OptimizerTrace base_trace;
  double auc_org = 0.0;
  std::vector<CandidateReport> candidates;
  // Set when the all-kept integration lowered the AUC and candidates were
  // re-admitted one at a time.
  bool readmitted = false;
  std::vector<std::string> post_frontier;
  double consolidated_auc = 0.0;
  std::string eval_split;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::size_t rows = 0;
  std::size_t train_rows = 0;
  std::size_t eval_rows = 0;
};

struct CamModel {
  QafModel qaf;
  PreprocessModel preprocess;
  std::vector<RoundReport> rounds;
  nlohmann::json config;
  SplitSpec split;
  double eval_auc = 0.0;
  double round0_org_auc = 0.0;
  LabelMap labels;
};

nlohmann::json ToJson(const RoundReport& report);
nlohmann::json ToJson(const CamModel& model);
CamModel CamModelFromJson(const nlohmann::json& j);
std::string SerializeCam(const CamModel& model);
CamModel DeserializeCam(std::string_view text);
CamModel LoadCamModel(const std::string& path);

// Rows with every feature missing are dropped before splitting. Throws
// kMissingMeaning when a feature has no embedding and kLabel on a
// single-class split.
CamModel Build(const RawDataset& dataset, const EmbeddingTable& embeddings,
               const PipelineConfig& config, std::uint64_t seed);

struct SplitData {
  RawDataset train;
  RawDataset eval;
};

// The exact train/eval split Build uses for `seed`.
SplitData MakeSplit(const RawDataset& dataset, const PreprocessConfig& config,
                    std::uint64_t seed);

struct Metrics {
  double auc = 0.0;
  std::size_t n = 0;
  std::size_t positives = 0;
};

Metrics EvaluateModel(const CamModel& cam, const RawDataset& split);

// Plain logistic regression on the preprocessed features of one split, scored
// on its eval side.
Metrics EvaluateBaseline(const RawDataset& dataset, const PipelineConfig& config,
                         std::uint64_t seed);

}  // namespace cam
