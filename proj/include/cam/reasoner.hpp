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

// Net-based gradual semantics on a QAF tree. Leaves take the instance value;
// every internal node aggregates alpha(a) = sum w(b,a) s(b) over its children
// and combines s(a) = phi(logit(beta(a)) + alpha(a)). One bottom-up sweep is
// exact on a tree.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cam/matrix.hpp"
#include "cam/qaf.hpp"

namespace cam {

struct StrengthAssignment {
  std::map<std::string, double> strength;

  // Throws kNotFound.
  double at(const std::string& id) const;
};

// A QafModel flattened into evaluation order. Children of a node are summed
// in edge-insertion order so results are bit reproducible.
class CompiledQaf {
 public:
  explicit CompiledQaf(const QafModel& model);

  std::size_t num_features() const { return feature_count_; }
  std::size_t num_nodes() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t index_of(const std::string& id) const;

  // Strength of every node, indexed like ids(). Throws kMisaligned.
  std::vector<double> EvaluateAll(std::span<const double> x) const;
  double Predict(std::span<const double> x) const;
  std::vector<double> Predict(const Matrix& x) const;
  // Strengths of one node for every row.
  std::vector<double> NodeColumn(const Matrix& x, const std::string& id) const;

 private:
  struct Step {
    std::size_t node;
    double logit_beta;
    std::vector<std::pair<std::size_t, double>> children;
  };

  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  // Node index for each instance coordinate.
  std::vector<std::size_t> feature_slots_;
  std::vector<Step> steps_;
  std::size_t feature_count_ = 0;
  std::size_t root_ = 0;
};

StrengthAssignment Evaluate(const QafModel& model, std::span<const double> x);
double Predict(const QafModel& model, std::span<const double> x);

// Mann-Whitney AUC with average ranks for ties. Throws kUndefinedMetric when
// only one class is present.
double Auc(std::span<const double> scores, std::span<const int> labels);

enum class FilterDecision { kKeep, kDrop };

// Keeps a candidate unless it lowers the evaluation AUC; ties keep.
FilterDecision FilterConcept(double auc_candidate, double auc_org);

}  // namespace cam
