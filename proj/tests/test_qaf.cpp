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

#include <algorithm>
#include <random>

#include "cam/error.hpp"
#include "cam/qaf.hpp"
#include "doctest.h"

using namespace cam;

namespace {

ArgumentNode Feature(const std::string& id) {
  return {id, NodeKind::kFeature, id, std::nullopt, std::nullopt, std::nullopt, 0};
}

ArgumentNode Concept(const std::string& id, double beta = 0.5, int round = 1) {
  return {id, NodeKind::kConcept, id, std::nullopt, std::nullopt, beta, round};
}

ArgumentNode Root(const std::string& id = "c_g", double beta = 0.5) {
  return {id, NodeKind::kRoot, id, std::nullopt, std::nullopt, beta, 0};
}

bool HasViolation(const ValidationReport& r, const std::string& kind) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

// root <- c1 <- {f1, f2}, root <- f3
QafModel SmallTree(double w1 = 0.4, double w2 = -0.2) {
  QafModel m;
  m.AddNode(Root());
  m.AddNode(Concept("c1"));
  for (const char* f : {"f1", "f2", "f3"}) m.AddNode(Feature(f));
  m.AddEdge({"f1", "c1", w1});
  m.AddEdge({"f2", "c1", w2});
  m.AddEdge({"c1", "c_g", 1.5});
  m.AddEdge({"f3", "c_g", -0.7});
  m.set_root("c_g");
  m.set_feature_order({"f1", "f2", "f3"});
  return m;
}

// Random valid tree: features are paired into concepts a few times, and
// whatever remains hangs off the root.
QafModel RandomTree(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nf(1, 8);
  std::uniform_real_distribution<double> w(-3.0, 3.0);
  std::uniform_real_distribution<double> beta(0.05, 0.95);
  QafModel m;
  m.AddNode(Root("c_g", beta(rng)));
  m.set_root("c_g");
  std::vector<std::string> frontier, order;
  const int n = nf(rng);
  for (int i = 0; i < n; ++i) {
    const std::string id = "f" + std::to_string(i);
    m.AddNode(Feature(id));
    frontier.push_back(id);
    order.push_back(id);
  }
  m.set_feature_order(order);
  int k = 0;
  while (frontier.size() >= 2 && rng() % 3 != 0) {
    std::shuffle(frontier.begin(), frontier.end(), rng);
    const std::string id = "c" + std::to_string(k++);
    m.AddNode(Concept(id, beta(rng)));
    for (int j = 0; j < 2; ++j) {
      double weight = w(rng);
      if (weight == 0.0) weight = 1.0;
      m.AddEdge({frontier.back(), id, weight});
      frontier.pop_back();
    }
    frontier.push_back(id);
  }
  for (const std::string& id : frontier) m.AddEdge({id, "c_g", w(rng) + 3.5});
  return m;
}

}  // namespace

TEST_CASE("leaves have neither attackers nor supporters") {
  const QafModel m = SmallTree();
  CHECK(Attackers(m, "f1").empty());
  CHECK(Supporters(m, "f1").empty());
}

TEST_CASE("attackers and supporters split children by weight sign") {
  const QafModel m = SmallTree(0.4, -0.2);
  CHECK(Attackers(m, "c1") == std::vector<std::string>{"f2"});
  CHECK(Supporters(m, "c1") == std::vector<std::string>{"f1"});
  CHECK_THROWS_AS(Attackers(m, "nope"), Error);
}

TEST_CASE("single root with no edges is valid") {
  QafModel m;
  m.AddNode(Root());
  m.set_root("c_g");
  const ValidationReport r = Validate(m);
  CHECK(r.ok());
  CHECK(r.inert.empty());
}

TEST_CASE("mutual parents are reported as a cycle") {
  QafModel m;
  m.AddNode(Root());
  m.AddNode(Concept("a"));
  m.AddNode(Concept("b"));
  m.set_root("c_g");
  m.AddEdge({"a", "b", 1.0});
  m.AddEdge({"b", "a", 1.0});
  CHECK(HasViolation(Validate(m), "cycle"));
}

TEST_CASE("a concept with three children violates arity") {
  QafModel m = SmallTree();
  m.AddNode(Feature("f4"));
  m.AddEdge({"f4", "c1", 0.3});
  m.set_feature_order({"f1", "f2", "f3", "f4"});
  CHECK(HasViolation(Validate(m), "arity"));
}

TEST_CASE("validation catches malformed shapes") {
  SUBCASE("missing root") {
    QafModel m = SmallTree();
    m.set_root("");
    CHECK(HasViolation(Validate(m), "root"));
  }
  SUBCASE("feature with a child") {
    QafModel m = SmallTree();
    m.AddNode(Feature("f4"));
    m.AddEdge({"f4", "f3", 1.0});
    m.set_feature_order({"f1", "f2", "f3", "f4"});
    CHECK(HasViolation(Validate(m), "kind"));
  }
  SUBCASE("two parents") {
    QafModel m = SmallTree();
    m.AddEdge({"f3", "c1", 1.0});
    CHECK(HasViolation(Validate(m), "tree"));
  }
  SUBCASE("feature order misses a feature") {
    QafModel m = SmallTree();
    m.set_feature_order({"f1", "f2"});
    CHECK(HasViolation(Validate(m), "feature-order"));
  }
  SUBCASE("meaning of the wrong dimension") {
    QafModel m = SmallTree();
    m.set_embedding_dim(3);
    m.SetMeaning("f1", {1.0, 0.0});
    CHECK(HasViolation(Validate(m), "meaning"));
  }
  SUBCASE("duplicate id") {
    QafModel m = SmallTree();
    CHECK_THROWS_AS(m.AddNode(Feature("f1")), Error);
  }
}

TEST_CASE("pruned zero edges leave inert nodes") {
  QafModel m = SmallTree();
  m.SetEdgeWeight("f3", "c_g", 0.0);
  CHECK(HasViolation(Validate(m), "weight"));
  const auto detached = m.PruneZeroEdges();
  CHECK(detached == std::vector<std::string>{"f3"});
  const ValidationReport r = Validate(m);
  CHECK(r.ok());
  CHECK(r.inert == std::vector<std::string>{"f3"});
}

TEST_CASE("base scores are clamped away from 0 and 1") {
  QafModel m = SmallTree();
  m.SetBaseScore("c_g", 1.0);
  CHECK(*m.node("c_g").base_score == doctest::Approx(1.0 - kBaseScoreEpsilon));
  m.SetBaseScore("c_g", 0.0);
  CHECK(*m.node("c_g").base_score == kBaseScoreEpsilon);
  CHECK(Validate(m).ok());
}

TEST_CASE("root polarity is the sign product along the path") {
  QafModel m;
  m.AddNode(Root());
  m.AddNode(Concept("c1"));
  m.AddNode(Concept("c2"));
  for (const char* f : {"a", "b", "c", "d"}) m.AddNode(Feature(f));
  m.set_root("c_g");
  m.AddEdge({"a", "c_g", 0.4});
  m.AddEdge({"c1", "c_g", -1.0});
  m.AddEdge({"b", "c1", -1.0});
  m.AddEdge({"c", "c1", 2.0});
  m.AddEdge({"c2", "c_g", 2.0});
  m.AddEdge({"d", "c2", -0.5});
  CHECK(RootPolarity(m, "a") == 1);
  CHECK(RootPolarity(m, "b") == 1);
  CHECK(RootPolarity(m, "c") == -1);
  CHECK(RootPolarity(m, "d") == -1);
  CHECK_THROWS_AS(RootPolarity(m, "c_g"), Error);
  CHECK_THROWS_AS(RootPolarity(m, "zz"), Error);
}

TEST_CASE("serialization round-trips") {
  SUBCASE("model without concepts") {
    QafModel m;
    m.AddNode(Root("c_g", 0.3));
    m.AddNode(Feature("f1"));
    m.AddEdge({"f1", "c_g", 0.25});
    m.set_root("c_g");
    m.set_feature_order({"f1"});
    CHECK(Deserialize(Serialize(m)) == m);
  }
  SUBCASE("tree with meanings and descriptions") {
    QafModel m = SmallTree(0.1 + 1e-17, -1.0 / 3.0);
    m.set_embedding_dim(2);
    m.SetMeaning("c1", {0.6, 0.8});
    m.SetLabel("c1", "Inquiry", std::string("Credit pulls"));
    const QafModel back = Deserialize(Serialize(m));
    CHECK(back == m);
    CHECK(back.FindEdge("f2", "c1")->weight == -1.0 / 3.0);
  }
}

TEST_CASE("deserialize rejects bad documents") {
  nlohmann::json doc = ToJson(SmallTree());
  doc.erase("root");
  try {
    QafModelFromJson(doc);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchema);
  }
  doc = ToJson(SmallTree());
  doc["schema_version"] = 99;
  CHECK_THROWS_AS(QafModelFromJson(doc), Error);
  try {
    Deserialize("{not json");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformed);
  }
}

TEST_CASE("property: children split into attackers and supporters") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const QafModel m = RandomTree(rng);
    REQUIRE(Validate(m).ok());
    for (const ArgumentNode& n : m.nodes()) {
      auto att = Attackers(m, n.id);
      auto sup = Supporters(m, n.id);
      std::vector<std::string> children;
      for (const Edge* e : m.ChildEdges(n.id)) children.push_back(e->child);
      std::vector<std::string> both = att;
      both.insert(both.end(), sup.begin(), sup.end());
      std::sort(both.begin(), both.end());
      std::sort(children.begin(), children.end());
      CHECK(both == children);
      for (const auto& a : att) {
        CHECK(std::find(sup.begin(), sup.end(), a) == sup.end());
      }
    }
  }
}

TEST_CASE("property: root polarity ignores positive rescaling") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    QafModel m = RandomTree(rng);
    std::map<std::string, int> before;
    for (const ArgumentNode& n : m.nodes()) {
      if (n.id != m.root()) before[n.id] = RootPolarity(m, n.id);
    }
    for (const Edge e : m.edges()) {
      m.SetEdgeWeight(e.child, e.parent, e.weight * scale(rng));
    }
    for (const auto& [id, sign] : before) CHECK(RootPolarity(m, id) == sign);
  }
}
