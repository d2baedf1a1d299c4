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

#include "cam/explainer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cam/error.hpp"

namespace cam {

namespace {

double Product(const QafModel& model, const StrengthAssignment& strengths,
               const std::string& id) {
  const Edge* up = model.ParentEdge(id);
  if (up == nullptr) {
    throw Error(ErrorCode::kStructure, "'" + id + "' has no parent edge");
  }
  return up->weight * strengths.at(id);
}

std::optional<std::string> ArgMaxExcept(const QafModel& model,
                                        const StrengthAssignment& strengths,
                                        std::span<const std::string> candidates,
                                        AttackRanking ranking,
                                        const std::optional<std::string>& skip) {
  std::optional<std::string> best;
  double best_key = 0.0;
  for (const std::string& id : candidates) {
    if (skip && id == *skip) continue;
    double key = Product(model, strengths, id);
    if (ranking == AttackRanking::kMagnitude) key = std::abs(key);
    if (!best || key > best_key || (key == best_key && id < *best)) {
      best = id;
      best_key = key;
    }
  }
  return best;
}

std::string TrimZeros(std::string s, std::size_t min_decimals) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) return s;
  std::size_t keep = s.size();
  while (keep > dot + 1 + min_decimals && s[keep - 1] == '0') --keep;
  if (min_decimals == 0 && keep == dot + 1) keep = dot;
  return s.substr(0, keep);
}

std::string Display(const QafModel& model, const std::string& id) {
  const std::string& label = model.node(id).label;
  return label.empty() ? id : label;
}

}  // namespace

std::string FormatCompact(double v) {
  return TrimZeros(fmt::format("{:.2f}", v), 0);
}

std::string FormatCited(double v, NodeKind kind) {
  const std::string s = fmt::format("{:.2f}", v);
  return kind == NodeKind::kFeature ? TrimZeros(s, 1) : s;
}

std::optional<std::string> MaxArg(const QafModel& model,
                                  const StrengthAssignment& strengths,
                                  std::span<const std::string> candidates,
                                  AttackRanking ranking) {
  return ArgMaxExcept(model, strengths, candidates, ranking, std::nullopt);
}

std::optional<std::string> SecArg(const QafModel& model,
                                  const StrengthAssignment& strengths,
                                  std::span<const std::string> candidates,
                                  AttackRanking ranking) {
  const auto first = MaxArg(model, strengths, candidates, ranking);
  if (!first) return std::nullopt;
  return ArgMaxExcept(model, strengths, candidates, ranking, first);
}

std::string ExplanationStep::Question() const {
  return "Why is " + subject_label + " evaluated as " +
         FormatCompact(subject_strength) + "?";
}

std::string ExplanationStep::Answer() const {
  if (lines.empty()) return {};
  std::string out = lines.front();
  for (std::size_t i = 1; i < lines.size(); ++i) out += "; " + lines[i];
  return out + ".";
}

ExplanationStep Explain(const QafModel& model,
                        const StrengthAssignment& strengths,
                        const std::string& subject, const Instance& instance,
                        const ExplainOptions& options) {
  const ArgumentNode& node = model.node(subject);
  if (strengths.strength.size() != model.nodes().size()) {
    throw Error(ErrorCode::kMisaligned, "strengths do not match the model");
  }

  ExplanationStep step;
  step.subject = subject;
  step.subject_label = Display(model, subject);
  step.subject_kind = node.kind;
  step.subject_strength = strengths.at(subject);

  if (node.kind == NodeKind::kFeature) {
    std::string raw;
    if (auto it = instance.raw.find(subject); it != instance.raw.end()) {
      raw = it->second;
    } else {
      const auto& order = model.feature_order();
      for (std::size_t i = 0; i < order.size() && i < instance.x.size(); ++i) {
        if (order[i] == subject) raw = fmt::format("{}", instance.x[i]);
      }
    }
    if (options.labels != nullptr) {
      if (auto it = options.labels->find(subject); it != options.labels->end()) {
        raw += it->second.unit;
      }
    }
    step.leaf_value = raw;
    step.lines.push_back("Because in this case, " + step.subject_label +
                         " is " + raw);
    return step;
  }

  const std::vector<std::string> att = Attackers(model, subject);
  const std::vector<std::string> sup = Supporters(model, subject);
  const bool is_root = subject == model.root();
  const double s = step.subject_strength;

  const std::vector<std::string>* chosen = nullptr;
  Role role = Role::kSupporting;
  if (is_root && s <= 0.5 && !att.empty()) {
    chosen = &att;
    role = Role::kAttacking;
  } else if (is_root && s > 0.5 && !sup.empty()) {
    chosen = &sup;
  } else if (!sup.empty()) {
    chosen = &sup;
  } else if (!att.empty()) {
    chosen = &att;
    role = Role::kAttacking;
    step.outside_rules = true;
  }
  if (chosen == nullptr) return step;

  const AttackRanking ranking = role == Role::kAttacking
                                    ? options.attack_ranking
                                    : AttackRanking::kSigned;
  const auto first = MaxArg(model, strengths, *chosen, ranking);
  const auto second = SecArg(model, strengths, *chosen, ranking);
  const char* word = role == Role::kAttacking ? "attacking" : "supporting";
  for (const auto& [id, pos] :
       {std::pair{first, Position::kPrimary}, {second, Position::kSecondary}}) {
    if (!id) continue;
    Citation c{*id, Display(model, *id), role, strengths.at(*id), pos};
    step.lines.push_back(fmt::format(
        "{} the {} argument {} is {}",
        pos == Position::kPrimary ? "Because" : "and", word, c.label,
        FormatCited(c.strength, model.node(*id).kind)));
    step.cited.push_back(std::move(c));
  }
  return step;
}

std::vector<ExplanationStep> DialoguePath(const QafModel& model,
                                          const StrengthAssignment& strengths,
                                          const Instance& instance,
                                          const ExplainOptions& options) {
  std::vector<ExplanationStep> path;
  std::string subject = model.root();
  for (std::size_t guard = 0; guard <= model.nodes().size(); ++guard) {
    ExplanationStep step = Explain(model, strengths, subject, instance, options);
    const bool descend = !step.cited.empty();
    if (descend) subject = step.cited.front().id;
    path.push_back(std::move(step));
    if (!descend) break;
  }
  return path;
}

nlohmann::json ToJson(const ExplanationStep& step) {
  nlohmann::json cited = nlohmann::json::array();
  for (const Citation& c : step.cited) {
    cited.push_back(
        {{"node", c.id},
         {"label", c.label},
         {"role", c.role == Role::kSupporting ? "supporting" : "attacking"},
         {"strength", c.strength},
         {"position", c.position == Position::kPrimary ? "primary" : "secondary"}});
  }
  nlohmann::json j = {{"subject", step.subject},
                      {"subject_label", step.subject_label},
                      {"subject_kind", NodeKindName(step.subject_kind)},
                      {"subject_strength", step.subject_strength},
                      {"cited", std::move(cited)},
                      {"empty", step.empty()},
                      {"outside_rules", step.outside_rules},
                      {"question", step.Question()},
                      {"answer", step.Answer()},
                      {"lines", step.lines}};
  j["leaf_value"] = step.leaf_value ? nlohmann::json(*step.leaf_value)
                                    : nlohmann::json();
  return j;
}

}  // namespace cam
