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

#include "cam/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "cam/error.hpp"

namespace cam {

void EmbeddingTable::Add(const std::string& id, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::kDegenerateVector,
                "vector for '" + id + "' has dimension " +
                    std::to_string(vector.size()) + ", expected " +
                    std::to_string(dim_));
  }
  double sq = 0.0;
  for (double v : vector) sq += v * v;
  if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::kDegenerateVector,
                "vector for '" + id + "' is not unit norm");
  }
  vectors_[id] = std::move(vector);
}

const std::vector<double>& EmbeddingTable::at(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) {
    throw Error(ErrorCode::kMissingMeaning, "no meaning vector for '" + id + "'");
  }
  return it->second;
}

EmbeddingTable EmbeddingTableFromJson(const nlohmann::json& j) {
  try {
    EmbeddingTable table(j.at("dim").get<std::size_t>(),
                         j.value("provenance", std::string("unknown")));
    for (const auto& [id, vec] : j.at("vectors").items()) {
      table.Add(id, vec.get<std::vector<double>>());
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("embedding table: ") + e.what());
  }
}

nlohmann::json ToJson(const EmbeddingTable& table) {
  return {{"dim", table.dim()},
          {"provenance", table.provenance()},
          {"vectors", table.vectors()}};
}

namespace {

nlohmann::json ReadJsonFile(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo,
                std::string("cannot open ") + what + " '" + path + "'");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, path + ": " + e.what());
  }
}

}  // namespace

EmbeddingTable LoadEmbeddingTable(const std::string& path) {
  return EmbeddingTableFromJson(ReadJsonFile(path, "embedding table"));
}

LabelMap LabelMapFromJson(const nlohmann::json& j) {
  LabelMap out;
  try {
    for (const auto& [id, entry] : j.items()) {
      out[id] = {entry.at("label").get<std::string>(),
                 entry.value("description", std::string()),
                 entry.value("unit", std::string())};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("label map: ") + e.what());
  }
  return out;
}

LabelMap LoadLabelMap(const std::string& path) {
  return LabelMapFromJson(ReadJsonFile(path, "label map"));
}

double CosineSimilarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDegenerateVector, "dimension mismatch");
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    throw Error(ErrorCode::kDegenerateVector, "zero vector");
  }
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<double> Normalized(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) throw Error(ErrorCode::kDegenerateVector, "zero vector");
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

std::vector<ConceptCandidate> ProposeGroups(
    std::span<const std::string> frontier, const EmbeddingTable& embeddings,
    double threshold, int round) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "grouping threshold must be in (0,1]");
  }
  for (const std::string& id : frontier) embeddings.at(id);

  struct Pair {
    double sim;
    std::string lo;
    std::string hi;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    for (std::size_t j = i + 1; j < frontier.size(); ++j) {
      const double sim = CosineSimilarity(embeddings.at(frontier[i]),
                                          embeddings.at(frontier[j]));
      if (sim >= threshold) {
        const auto [lo, hi] = std::minmax(frontier[i], frontier[j]);
        pairs.push_back({sim, lo, hi});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.sim, a.lo, a.hi) < std::tie(a.sim, b.lo, b.hi);
  });

  std::vector<ConceptCandidate> out;
  std::vector<std::string> matched;
  auto is_matched = [&](const std::string& id) {
    return std::find(matched.begin(), matched.end(), id) != matched.end();
  };
  for (const Pair& p : pairs) {
    if (is_matched(p.lo) || is_matched(p.hi)) continue;
    matched.push_back(p.lo);
    matched.push_back(p.hi);
    ConceptCandidate c;
    c.id = "c" + std::to_string(round) + "_" + std::to_string(out.size());
    c.children = {p.lo, p.hi};
    const auto& u = embeddings.at(p.lo);
    const auto& v = embeddings.at(p.hi);
    std::vector<double> mean(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) mean[k] = 0.5 * (u[k] + v[k]);
    c.meaning = Normalized(mean);
    c.similarity = p.sim;
    c.label = p.lo + "+" + p.hi;
    out.push_back(std::move(c));
  }
  return out;
}

AbstractedConcept AbstractConcept(const ConceptCandidate& candidate,
                                  const LabelMap* labels,
                                  const EmbeddingTable* embeddings,
                                  const QafModel* model, int round) {
  AbstractedConcept out;
  ArgumentNode& n = out.node;
  n.id = candidate.id;
  n.kind = NodeKind::kConcept;
  n.meaning = candidate.meaning;
  n.base_score = 0.5;
  n.round = round;
  n.label = candidate.label;

  if (model != nullptr) {
    const ArgumentNode& a = model->node(candidate.children.first);
    const ArgumentNode& b = model->node(candidate.children.second);
    n.label = a.label + "+" + b.label;
  }
  if (labels != nullptr) {
    if (auto it = labels->find(candidate.id); it != labels->end()) {
      n.label = it->second.label;
      if (!it->second.description.empty()) {
        n.description = it->second.description;
      }
      if (embeddings != nullptr && embeddings->contains(candidate.id)) {
        n.meaning = embeddings->at(candidate.id);
      }
    }
  }
  out.left = {candidate.children.first, candidate.id, 0.0};
  out.right = {candidate.children.second, candidate.id, 0.0};
  return out;
}

}  // namespace cam
