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

// Dialogical explanations. Asked "why is a evaluated as s(a)?", the model
// answers with the one or two children that weigh most on a (largest w * s),
// or with the raw input value when a is a feature. Following the primary
// citation from the root down to a leaf gives the dominated reasoning path.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cam/qaf.hpp"
#include "cam/reasoner.hpp"
#include "cam/semantic.hpp"
#include "json.hpp"

namespace cam {

// How attackers are ranked. kMagnitude cites the attack with the largest
// |w * s|; kSigned is the literal argmax of the signed product, which picks
// the weakest attack.
enum class AttackRanking { kMagnitude, kSigned };

enum class Role { kSupporting, kAttacking };
enum class Position { kPrimary, kSecondary };

struct Citation {
  std::string id;
  std::string label;
  Role role = Role::kSupporting;
  double strength = 0.0;
  Position position = Position::kPrimary;
};

struct ExplanationStep {
  std::string subject;
  std::string subject_label;
  NodeKind subject_kind = NodeKind::kFeature;
  double subject_strength = 0.0;
  std::vector<Citation> cited;
  std::optional<std::string> leaf_value;
  // Internal node answered from its attackers although it is not the root;
  // The dialogue rules have no case for that.
  bool outside_rules = false;
  std::vector<std::string> lines;

  bool empty() const { return cited.empty() && !leaf_value; }
  std::string Question() const;
  // Rendered lines joined into one sentence; empty for the empty response.
  std::string Answer() const;
};

// Raw and transformed views of one instance.
struct Instance {
  std::vector<double> x;
  std::map<std::string, std::string> raw;
};

struct ExplainOptions {
  AttackRanking attack_ranking = AttackRanking::kMagnitude;
  // Optional display units for raw feature values, keyed by node id.
  const LabelMap* labels = nullptr;
};

// argmax over `candidates` of w(a, parent(a)) * s(a); ties go to the smaller
// id. None when `candidates` is empty.
std::optional<std::string> MaxArg(const QafModel& model,
                                  const StrengthAssignment& strengths,
                                  std::span<const std::string> candidates,
                                  AttackRanking ranking = AttackRanking::kSigned);
// The same argmax with MaxArg's winner removed.
std::optional<std::string> SecArg(const QafModel& model,
                                  const StrengthAssignment& strengths,
                                  std::span<const std::string> candidates,
                                  AttackRanking ranking = AttackRanking::kSigned);

// Throws kNotFound for an unknown subject and kMisaligned when the strengths
// do not belong to the model.
ExplanationStep Explain(const QafModel& model,
                        const StrengthAssignment& strengths,
                        const std::string& subject, const Instance& instance,
                        const ExplainOptions& options = {});

std::vector<ExplanationStep> DialoguePath(const QafModel& model,
                                          const StrengthAssignment& strengths,
                                          const Instance& instance,
                                          const ExplainOptions& options = {});

// "0.92", "1": two decimals, trailing zeros dropped.
std::string FormatCompact(double v);
// Strength as cited in an answer: two decimals for concepts, trailing zeros
// trimmed to one decimal for features ("1.0", "0.22").
std::string FormatCited(double v, NodeKind kind);

nlohmann::json ToJson(const ExplanationStep& step);

}  // namespace cam
