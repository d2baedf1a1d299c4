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

#include "cam/qaf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cam/error.hpp"

namespace cam {

double ClampBaseScore(double beta) {
  return std::clamp(beta, kBaseScoreEpsilon, 1.0 - kBaseScoreEpsilon);
}

std::string_view NodeKindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kFeature:
      return "feature";
    case NodeKind::kConcept:
      return "concept";
    case NodeKind::kRoot:
      return "root";
  }
  return "feature";
}

NodeKind ParseNodeKind(std::string_view name) {
  if (name == "feature") return NodeKind::kFeature;
  if (name == "concept") return NodeKind::kConcept;
  if (name == "root") return NodeKind::kRoot;
  throw Error(ErrorCode::kSchema, "unknown node kind '" + std::string(name) +
                                      "'");
}

void QafModel::AddNode(ArgumentNode node) {
  if (index_.count(node.id) > 0) {
    throw Error(ErrorCode::kStructure, "duplicate node id '" + node.id + "'");
  }
  if (node.base_score) node.base_score = ClampBaseScore(*node.base_score);
  index_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
}

void QafModel::AddEdge(Edge edge) { edges_.push_back(std::move(edge)); }

void QafModel::RemoveEdge(std::string_view child, std::string_view parent) {
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.child == child && e.parent == parent;
  });
  if (it == edges_.end()) {
    throw Error(ErrorCode::kNotFound, "no edge " + std::string(child) +
                                          " -> " + std::string(parent));
  }
  edges_.erase(it);
}

Edge* QafModel::MutableEdge(std::string_view child, std::string_view parent) {
  for (Edge& e : edges_) {
    if (e.child == child && e.parent == parent) return &e;
  }
  return nullptr;
}

void QafModel::SetEdgeWeight(std::string_view child, std::string_view parent,
                             double weight) {
  Edge* edge = MutableEdge(child, parent);
  if (edge == nullptr) {
    throw Error(ErrorCode::kNotFound, "no edge " + std::string(child) +
                                          " -> " + std::string(parent));
  }
  edge->weight = weight;
}

void QafModel::SetBaseScore(std::string_view id, double beta) {
  nodes_[IndexOf(id)].base_score = ClampBaseScore(beta);
}

void QafModel::SetMeaning(std::string_view id, std::vector<double> meaning) {
  nodes_[IndexOf(id)].meaning = std::move(meaning);
}

void QafModel::SetLabel(std::string_view id, std::string label,
                        std::optional<std::string> description) {
  ArgumentNode& n = nodes_[IndexOf(id)];
  n.label = std::move(label);
  n.description = std::move(description);
}

std::vector<std::string> QafModel::PruneZeroEdges() {
  std::vector<std::string> detached;
  std::vector<Edge> kept;
  kept.reserve(edges_.size());
  for (Edge& e : edges_) {
    if (std::abs(e.weight) < kPruneEpsilon) {
      detached.push_back(e.child);
    } else {
      kept.push_back(std::move(e));
    }
  }
  edges_ = std::move(kept);
  return detached;
}

bool QafModel::contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

std::size_t QafModel::IndexOf(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown node '" + std::string(id) + "'");
  }
  return it->second;
}

const ArgumentNode& QafModel::node(std::string_view id) const {
  return nodes_[IndexOf(id)];
}

std::vector<const Edge*> QafModel::ChildEdges(std::string_view id) const {
  std::vector<const Edge*> out;
  for (const Edge& e : edges_) {
    if (e.parent == id) out.push_back(&e);
  }
  return out;
}

const Edge* QafModel::ParentEdge(std::string_view id) const {
  for (const Edge& e : edges_) {
    if (e.child == id) return &e;
  }
  return nullptr;
}

const Edge* QafModel::FindEdge(std::string_view child,
                               std::string_view parent) const {
  for (const Edge& e : edges_) {
    if (e.child == child && e.parent == parent) return &e;
  }
  return nullptr;
}

bool QafModel::operator==(const QafModel& other) const {
  return nodes_ == other.nodes_ && edges_ == other.edges_ &&
         root_ == other.root_ && embedding_dim_ == other.embedding_dim_ &&
         feature_order_ == other.feature_order_;
}

namespace {

std::vector<std::string> ChildrenBySign(const QafModel& model,
                                        std::string_view id, int sign) {
  model.node(id);  // existence check
  std::vector<std::string> out;
  for (const Edge* e : model.ChildEdges(id)) {
    if ((sign < 0 && e->weight < 0.0) || (sign > 0 && e->weight > 0.0)) {
      out.push_back(e->child);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> Attackers(const QafModel& model, std::string_view id) {
  return ChildrenBySign(model, id, -1);
}

std::vector<std::string> Supporters(const QafModel& model,
                                    std::string_view id) {
  return ChildrenBySign(model, id, +1);
}

std::string ValidationReport::ToString() const {
  std::ostringstream os;
  for (const Violation& v : violations) {
    os << v.kind << ": " << v.message;
    if (!v.ids.empty()) {
      os << " [";
      for (std::size_t i = 0; i < v.ids.size(); ++i) {
        os << (i ? ", " : "") << v.ids[i];
      }
      os << "]";
    }
    os << "\n";
  }
  for (const std::string& id : inert) os << "inert: " << id << "\n";
  return os.str();
}

ValidationReport Validate(const QafModel& model) {
  ValidationReport report;
  auto add = [&](std::string kind, std::vector<std::string> ids,
                 std::string message) {
    report.violations.push_back(
        {std::move(kind), std::move(ids), std::move(message)});
  };

  // Root.
  if (model.root().empty() || !model.contains(model.root())) {
    add("root", {model.root()}, "root is missing or unknown");
  } else if (model.node(model.root()).kind != NodeKind::kRoot) {
    add("root", {model.root()}, "root node must have kind=root");
  }
  for (const ArgumentNode& n : model.nodes()) {
    if (n.kind == NodeKind::kRoot && n.id != model.root()) {
      add("root", {n.id}, "more than one node has kind=root");
    }
  }

  // Nodes.
  for (const ArgumentNode& n : model.nodes()) {
    const bool wants_score = n.kind != NodeKind::kFeature;
    if (wants_score != n.base_score.has_value()) {
      add("base-score", {n.id},
          wants_score ? "concept/root without base score"
                      : "feature with base score");
    }
    if (n.base_score && !(*n.base_score > 0.0 && *n.base_score < 1.0)) {
      add("base-score", {n.id}, "base score outside (0,1)");
    }
    if (n.kind == NodeKind::kFeature && n.round != 0) {
      add("round", {n.id}, "feature round must be 0");
    }
    if (n.round < 0) add("round", {n.id}, "negative round");
    if (n.meaning) {
      if (n.meaning->size() != model.embedding_dim()) {
        add("meaning", {n.id}, "meaning dimension differs from embedding_dim");
      }
      double sq = 0.0;
      for (double v : *n.meaning) sq += v * v;
      if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
        add("meaning", {n.id}, "meaning is not unit norm");
      }
    }
  }

  // Edges.
  std::unordered_map<std::string, int> parent_count;
  std::unordered_map<std::string, int> child_count;
  for (const Edge& e : model.edges()) {
    const bool known = model.contains(e.child) && model.contains(e.parent);
    if (!known) {
      add("edge", {e.child, e.parent}, "edge endpoint is unknown");
      continue;
    }
    if (!std::isfinite(e.weight)) {
      add("weight", {e.child, e.parent}, "edge weight is not finite");
    } else if (std::abs(e.weight) < kPruneEpsilon) {
      add("weight", {e.child, e.parent}, "zero-weight edge was not pruned");
    }
    if (e.child == e.parent) add("cycle", {e.child}, "self loop");
    ++parent_count[e.child];
    ++child_count[e.parent];
  }

  for (const ArgumentNode& n : model.nodes()) {
    const int parents = parent_count[n.id];
    const int children = child_count[n.id];
    if (n.id == model.root()) {
      if (parents > 0) add("tree", {n.id}, "root has a parent");
    } else if (parents > 1) {
      add("tree", {n.id}, "node has more than one parent");
    } else if (parents == 0) {
      report.inert.push_back(n.id);
    }
    if (n.kind == NodeKind::kFeature && children > 0) {
      add("kind", {n.id}, "feature node has children");
    }
    if (n.kind == NodeKind::kConcept && children == 0) {
      add("kind", {n.id}, "concept node is a leaf");
    }
    if (n.kind == NodeKind::kConcept && children > 2) {
      add("arity", {n.id}, "concept has more than two children");
    }
  }

  // Cycles: walk up from every node; a path longer than the node count loops.
  const std::size_t limit = model.nodes().size();
  std::unordered_set<std::string> reported;
  for (const ArgumentNode& n : model.nodes()) {
    std::string cur = n.id;
    std::size_t steps = 0;
    while (const Edge* up = model.ParentEdge(cur)) {
      if (!model.contains(up->parent)) break;
      cur = up->parent;
      if (++steps > limit) {
        if (reported.insert(cur).second) {
          add("cycle", {n.id, cur}, "parent chain does not terminate");
        }
        break;
      }
    }
  }

  // Feature order.
  std::unordered_map<std::string, int> seen;
  for (const std::string& id : model.feature_order()) {
    ++seen[id];
    if (!model.contains(id) || model.node(id).kind != NodeKind::kFeature) {
      add("feature-order", {id}, "feature_order entry is not a feature node");
    }
  }
  for (const ArgumentNode& n : model.nodes()) {
    if (n.kind == NodeKind::kFeature && seen[n.id] != 1) {
      add("feature-order", {n.id},
          "feature must appear exactly once in feature_order");
    }
  }
  return report;
}

int RootPolarity(const QafModel& model, std::string_view id) {
  model.node(id);
  if (id == model.root()) {
    throw Error(ErrorCode::kStructure, "root has no polarity");
  }
  int sign = 1;
  std::string cur(id);
  std::size_t steps = 0;
  while (cur != model.root()) {
    const Edge* up = model.ParentEdge(cur);
    if (up == nullptr) {
      throw Error(ErrorCode::kStructure,
                  "node '" + std::string(id) + "' is not connected to root");
    }
    if (up->weight == 0.0 || !std::isfinite(up->weight)) {
      throw Error(ErrorCode::kStructure, "zero-weight edge on path from '" +
                                             std::string(id) + "'");
    }
    if (up->weight < 0.0) sign = -sign;
    cur = up->parent;
    if (++steps > model.nodes().size()) {
      throw Error(ErrorCode::kStructure, "cycle above '" + std::string(id) +
                                             "'");
    }
  }
  return sign;
}

nlohmann::json ToJson(const QafModel& model) {
  using nlohmann::json;
  json nodes = json::array();
  for (const ArgumentNode& n : model.nodes()) {
    json j = {{"id", n.id},
              {"kind", NodeKindName(n.kind)},
              {"label", n.label},
              {"round", n.round}};
    if (n.description) j["description"] = *n.description;
    if (n.meaning) j["meaning"] = *n.meaning;
    if (n.base_score) j["base_score"] = *n.base_score;
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const Edge& e : model.edges()) {
    edges.push_back(
        {{"child", e.child}, {"parent", e.parent}, {"weight", e.weight}});
  }
  return {{"schema_version", kQafSchemaVersion},
          {"embedding_dim", model.embedding_dim()},
          {"feature_order", model.feature_order()},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"root", model.root()}};
}

namespace {

const nlohmann::json& Require(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kSchema,
                std::string("model document is missing '") + key + "'");
  }
  return obj.at(key);
}

}  // namespace

QafModel QafModelFromJson(const nlohmann::json& doc) {
  try {
    const int version = Require(doc, "schema_version").get<int>();
    if (version != kQafSchemaVersion) {
      throw Error(ErrorCode::kSchema,
                  "unknown schema version " + std::to_string(version));
    }
    QafModel model;
    model.set_root(Require(doc, "root").get<std::string>());
    model.set_embedding_dim(Require(doc, "embedding_dim").get<std::size_t>());
    model.set_feature_order(
        Require(doc, "feature_order").get<std::vector<std::string>>());
    for (const auto& j : Require(doc, "nodes")) {
      ArgumentNode n;
      n.id = Require(j, "id").get<std::string>();
      n.kind = ParseNodeKind(Require(j, "kind").get<std::string>());
      n.label = Require(j, "label").get<std::string>();
      n.round = Require(j, "round").get<int>();
      if (j.contains("description")) {
        n.description = j.at("description").get<std::string>();
      }
      if (j.contains("meaning")) {
        n.meaning = j.at("meaning").get<std::vector<double>>();
      }
      if (j.contains("base_score")) {
        n.base_score = j.at("base_score").get<double>();
      }
      model.AddNode(std::move(n));
    }
    for (const auto& j : Require(doc, "edges")) {
      model.AddEdge({Require(j, "child").get<std::string>(),
                     Require(j, "parent").get<std::string>(),
                     Require(j, "weight").get<double>()});
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, e.what());
  }
}

std::string Serialize(const QafModel& model) {
  ValidationReport report = Validate(model);
  if (!report.ok()) {
    throw Error(ErrorCode::kStructure,
                "refusing to serialize invalid model:\n" + report.ToString());
  }
  return ToJson(model).dump(2);
}

QafModel Deserialize(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
  return QafModelFromJson(doc);
}

}  // namespace cam
