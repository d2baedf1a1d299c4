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

#include "cam/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cam/error.hpp"
#include "cam/learner.hpp"

namespace cam {

double StrengthAssignment::at(const std::string& id) const {
  auto it = strength.find(id);
  if (it == strength.end()) {
    throw Error(ErrorCode::kNotFound, "no strength for '" + id + "'");
  }
  return it->second;
}

CompiledQaf::CompiledQaf(const QafModel& model) {
  for (const ArgumentNode& n : model.nodes()) {
    index_.emplace(n.id, ids_.size());
    ids_.push_back(n.id);
  }
  root_ = index_of(model.root());
  feature_count_ = model.feature_order().size();
  for (const std::string& f : model.feature_order()) {
    feature_slots_.push_back(index_of(f));
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> children(
      ids_.size());
  std::vector<int> parents(ids_.size(), 0);
  for (const Edge& e : model.edges()) {
    const std::size_t c = index_of(e.child);
    children[index_of(e.parent)].emplace_back(c, e.weight);
    ++parents[c];
  }

  // Post-order from every parentless node; a repeated visit means the edges
  // do not form a forest.
  std::vector<int> state(ids_.size(), 0);  // 0 new, 1 open, 2 done
  for (std::size_t start = 0; start < ids_.size(); ++start) {
    if (parents[start] != 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    state[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < children[node].size()) {
        const std::size_t child = children[node][next++].first;
        if (state[child] != 0) {
          throw Error(ErrorCode::kStructure, "edges do not form a tree at '" +
                                                 ids_[child] + "'");
        }
        state[child] = 1;
        stack.emplace_back(child, 0);
        continue;
      }
      const ArgumentNode& n = model.node(ids_[node]);
      if (n.kind != NodeKind::kFeature) {
        const double beta = n.base_score.value_or(0.5);
        if (!(beta > 0.0 && beta < 1.0)) {
          throw Error(ErrorCode::kStructure,
                      "base score outside (0,1) at '" + n.id + "'");
        }
        steps_.push_back(
            {node, std::log(beta / (1.0 - beta)), children[node]});
      }
      state[node] = 2;
      stack.pop_back();
    }
  }
  if (std::any_of(state.begin(), state.end(), [](int s) { return s != 2; })) {
    throw Error(ErrorCode::kStructure, "model contains a cycle");
  }
}

std::size_t CompiledQaf::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown node '" + id + "'");
  }
  return it->second;
}

std::vector<double> CompiledQaf::EvaluateAll(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorCode::kMisaligned,
                "instance has " + std::to_string(x.size()) +
                    " values, model has " + std::to_string(feature_count_) +
                    " features");
  }
  std::vector<double> s(ids_.size(), 0.0);
  for (std::size_t i = 0; i < feature_count_; ++i) s[feature_slots_[i]] = x[i];
  for (const Step& step : steps_) {
    double alpha = 0.0;
    for (const auto& [child, weight] : step.children) alpha += weight * s[child];
    s[step.node] = Logistic(step.logit_beta + alpha);
  }
  return s;
}

double CompiledQaf::Predict(std::span<const double> x) const {
  return EvaluateAll(x)[root_];
}

std::vector<double> CompiledQaf::Predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = Predict(x.row(r));
  return out;
}

std::vector<double> CompiledQaf::NodeColumn(const Matrix& x,
                                            const std::string& id) const {
  const std::size_t idx = index_of(id);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = EvaluateAll(x.row(r))[idx];
  return out;
}

StrengthAssignment Evaluate(const QafModel& model, std::span<const double> x) {
  const CompiledQaf compiled(model);
  const std::vector<double> s = compiled.EvaluateAll(x);
  StrengthAssignment out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.strength.emplace(compiled.ids()[i], s[i]);
  }
  return out;
}

double Predict(const QafModel& model, std::span<const double> x) {
  return CompiledQaf(model).Predict(x);
}

double Auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kMisaligned, "scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double positives = 0.0;
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positives += 1.0;
        rank_sum += avg_rank;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw Error(ErrorCode::kUndefinedMetric, "AUC needs both classes");
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) /
         (positives * negatives);
}

FilterDecision FilterConcept(double auc_candidate, double auc_org) {
  return auc_candidate >= auc_org ? FilterDecision::kKeep
                                  : FilterDecision::kDrop;
}

}  // namespace cam
