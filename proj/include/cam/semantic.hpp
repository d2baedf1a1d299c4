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

// Semantic mining: pairs frontier nodes whose meaning vectors are close and
// abstracts each pair into a concept candidate. Only vectors are consulted;
// descriptions are carried along for display.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cam/qaf.hpp"
#include "json.hpp"

namespace cam {

inline constexpr double kDefaultGroupingThreshold = 0.55;

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::string provenance)
      : dim_(dim), provenance_(std::move(provenance)) {}

  // Throws kDegenerateVector for a wrong dimension or a non-unit vector.
  void Add(const std::string& id, std::vector<double> vector);
  bool contains(const std::string& id) const {
    return vectors_.count(id) > 0;
  }
  // Throws kMissingMeaning.
  const std::vector<double>& at(const std::string& id) const;

  std::size_t dim() const { return dim_; }
  const std::string& provenance() const { return provenance_; }
  const std::map<std::string, std::vector<double>>& vectors() const {
    return vectors_;
  }

 private:
  std::size_t dim_ = 0;
  std::string provenance_;
  std::map<std::string, std::vector<double>> vectors_;
};

// File format: {"dim": d, "provenance": "...", "vectors": {"id": [..]}}.
EmbeddingTable EmbeddingTableFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const EmbeddingTable& table);
EmbeddingTable LoadEmbeddingTable(const std::string& path);

struct ConceptLabel {
  std::string label;
  std::string description;
  // Display suffix for raw feature values, e.g. "%".
  std::string unit;
};
using LabelMap = std::map<std::string, ConceptLabel>;

LabelMap LabelMapFromJson(const nlohmann::json& j);
LabelMap LoadLabelMap(const std::string& path);

// Throws kDegenerateVector on a zero vector or a dimension mismatch.
double CosineSimilarity(std::span<const double> u, std::span<const double> v);

// Returns v / |v|. Throws kDegenerateVector on a zero vector.
std::vector<double> Normalized(std::span<const double> v);

struct ConceptCandidate {
  std::string id;
  std::pair<std::string, std::string> children;
  std::vector<double> meaning;
  double similarity = 0.0;
  std::string label;
};

// Greedy disjoint matching: repeatedly takes the most similar pair at or above
// `threshold` whose members are both unmatched. Equal similarities resolve to
// the lexicographically smallest (min id, max id). Candidate ids are
// "c<round>_<k>" with k the selection index; meanings are the normalized mean
// of the children.
std::vector<ConceptCandidate> ProposeGroups(
    std::span<const std::string> frontier, const EmbeddingTable& embeddings,
    double threshold, int round);

struct AbstractedConcept {
  ArgumentNode node;
  Edge left;
  Edge right;
};

// Builds the concept node for a candidate plus its two child edges, weights
// left at zero until training. Without a label-map entry the label joins the
// children's labels. With one, the node takes the human label and description,
// and its meaning is the embedding-table vector for the concept id when the
// table has one. Throws kNotFound when a child is not a node of `model`.
AbstractedConcept AbstractConcept(const ConceptCandidate& candidate,
                                  const LabelMap* labels,
                                  const EmbeddingTable* embeddings,
                                  const QafModel* model, int round);

}  // namespace cam
