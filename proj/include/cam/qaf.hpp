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

// Quantitative argumentation frameworks restricted to trees. Arguments carry
// an optional base score and meaning vector. Edges are stored child -> parent
// with a signed weight. Features are leaves, concepts are binary internal
// nodes and a single root holds the global concept.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace cam {

inline constexpr int kQafSchemaVersion = 1;

// Base scores are kept away from {0,1} so logit(beta) stays finite.
inline constexpr double kBaseScoreEpsilon = 1e-12;
// Edges lighter than this carry no sign and are pruned.
inline constexpr double kPruneEpsilon = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-9;

double ClampBaseScore(double beta);

enum class NodeKind { kFeature, kConcept, kRoot };

std::string_view NodeKindName(NodeKind kind);
NodeKind ParseNodeKind(std::string_view name);

struct ArgumentNode {
  std::string id;
  NodeKind kind = NodeKind::kFeature;
  std::string label;
  std::optional<std::string> description;
  std::optional<std::vector<double>> meaning;
  std::optional<double> base_score;
  int round = 0;

  bool operator==(const ArgumentNode&) const = default;
};

struct Edge {
  std::string child;
  std::string parent;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

class QafModel {
 public:
  QafModel() = default;

  // Throws kStructure on a duplicate id.
  void AddNode(ArgumentNode node);
  // Appends an edge. Shape is not checked here; see Validate().
  void AddEdge(Edge edge);
  // Throws kNotFound if the edge does not exist.
  void RemoveEdge(std::string_view child, std::string_view parent);
  void SetEdgeWeight(std::string_view child, std::string_view parent,
                     double weight);
  // Stores ClampBaseScore(beta).
  void SetBaseScore(std::string_view id, double beta);
  void SetMeaning(std::string_view id, std::vector<double> meaning);
  void SetLabel(std::string_view id, std::string label,
                std::optional<std::string> description);

  // Drops every edge with |weight| < kPruneEpsilon and returns the ids of the
  // children that were detached. The children stay in the model as inert
  // nodes.
  std::vector<std::string> PruneZeroEdges();

  void set_root(std::string id) { root_ = std::move(id); }
  void set_embedding_dim(std::size_t dim) { embedding_dim_ = dim; }
  void set_feature_order(std::vector<std::string> order) {
    feature_order_ = std::move(order);
  }

  const std::string& root() const { return root_; }
  std::size_t embedding_dim() const { return embedding_dim_; }
  const std::vector<std::string>& feature_order() const {
    return feature_order_;
  }
  const std::vector<ArgumentNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(std::string_view id) const;
  // Throws kNotFound.
  const ArgumentNode& node(std::string_view id) const;
  // Edges whose parent is `id`, in insertion order.
  std::vector<const Edge*> ChildEdges(std::string_view id) const;
  // Null for the root and for detached nodes. If several edges leave `id`
  // the first inserted one is returned.
  const Edge* ParentEdge(std::string_view id) const;
  const Edge* FindEdge(std::string_view child, std::string_view parent) const;

  bool operator==(const QafModel& other) const;

 private:
  std::size_t IndexOf(std::string_view id) const;
  Edge* MutableEdge(std::string_view child, std::string_view parent);

  std::vector<ArgumentNode> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string root_;
  std::size_t embedding_dim_ = 0;
  std::vector<std::string> feature_order_;
};

// Children b of `id` with w(b, id) < 0. Throws kNotFound.
std::vector<std::string> Attackers(const QafModel& model, std::string_view id);
// Children b of `id` with w(b, id) > 0. Throws kNotFound.
std::vector<std::string> Supporters(const QafModel& model,
                                    std::string_view id);

struct Violation {
  std::string kind;
  std::vector<std::string> ids;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Non-root nodes without a parent edge (pruned zero-weight edges). Inert
  // nodes are reported, not rejected.
  std::vector<std::string> inert;

  bool ok() const { return violations.empty(); }
  std::string ToString() const;
};

ValidationReport Validate(const QafModel& model);

// Product of the edge-weight signs on the path from `id` up to the root.
// Throws kNotFound for an unknown id and kStructure for the root itself, a
// detached node, or a zero weight on the path.
int RootPolarity(const QafModel& model, std::string_view id);

nlohmann::json ToJson(const QafModel& model);
// Throws kSchema for missing fields or an unknown schema version.
QafModel QafModelFromJson(const nlohmann::json& doc);

// Throws kStructure if the model does not validate.
std::string Serialize(const QafModel& model);
// Throws kMalformed for unparsable text and kSchema for a bad document.
QafModel Deserialize(std::string_view text);

}  // namespace cam
