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

#include "cam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cam/error.hpp"
#include "cam/reasoner.hpp"

namespace cam {

namespace {

constexpr int kCamSchemaVersion = 1;

nlohmann::json ToJson(const LabelMap& labels) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, l] : labels) {
    nlohmann::json e = {{"label", l.label}};
    if (!l.description.empty()) e["description"] = l.description;
    if (!l.unit.empty()) e["unit"] = l.unit;
    j[id] = std::move(e);
  }
  return j;
}

// Per-node materialized strengths for both sides of the split.
struct Columns {
  std::map<std::string, std::vector<double>> train;
  std::map<std::string, std::vector<double>> eval;
};

Matrix FrontierMatrix(const std::map<std::string, std::vector<double>>& cols,
                      const std::vector<std::string>& frontier,
                      std::size_t rows) {
  Matrix m(rows, frontier.size());
  for (std::size_t c = 0; c < frontier.size(); ++c) {
    const std::vector<double>& col = cols.at(frontier[c]);
    for (std::size_t r = 0; r < rows; ++r) m(r, c) = col[r];
  }
  return m;
}

// Replaces the root layer of `structure` with edges frontier -> root in
// frontier order, weights taken from `fit`.
QafModel WithTopLayer(const QafModel& structure,
                      const std::vector<std::string>& frontier,
                      const LinearFit& fit) {
  QafModel out = structure;
  for (const Edge* e : structure.ChildEdges(structure.root())) {
    out.RemoveEdge(e->child, e->parent);
  }
  for (const std::string& id : frontier) out.AddEdge({id, out.root(), 0.0});
  return Instantiate(out, frontier, fit);
}

double EvalAuc(const QafModel& model, const Matrix& x,
               std::span<const int> labels) {
  return Auc(CompiledQaf(model).Predict(x), labels);
}

struct Stage {
  QafModel model;  // structure plus instantiated top layer
  std::vector<std::string> frontier;
  double auc = 0.0;
  LinearFit fit;
};

}  // namespace

PipelineConfig PipelineConfigFromJson(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (j.contains("preprocess")) {
      c.preprocess = PreprocessConfigFromJson(j.at("preprocess"));
    }
    if (j.contains("train")) c.train = TrainConfigFromJson(j.at("train"));
    c.threshold = j.value("threshold", c.threshold);
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.root_id = j.value("root_id", c.root_id);
    c.root_label = j.value("root_label", c.root_label);
    if (j.contains("labels") && j.at("labels").is_object()) {
      c.labels = LabelMapFromJson(j.at("labels"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "threshold must be in (0,1]");
  }
  if (c.max_rounds < 0) throw Error(ErrorCode::kConfig, "max_rounds < 0");
  return c;
}

nlohmann::json ToJson(const PipelineConfig& c) {
  return {{"preprocess", ToJson(c.preprocess)},
          {"train", ToJson(c.train)},
          {"threshold", c.threshold},
          {"max_rounds", c.max_rounds},
          {"root_id", c.root_id},
          {"root_label", c.root_label},
          {"labels", ToJson(c.labels)}};
}

SplitData MakeSplit(const RawDataset& dataset, const PreprocessConfig& config,
                    std::uint64_t seed) {
  const RawDataset data = DropEmptyRows(dataset, config);
  const Split split = SplitIndices(data.size(), seed, config.train_fraction);
  return {data.Subset(split.train), data.Subset(split.eval)};
}

CamModel Build(const RawDataset& dataset, const EmbeddingTable& embeddings,
               const PipelineConfig& config, std::uint64_t seed) {
  for (const std::string& f : dataset.columns) embeddings.at(f);

  const SplitData split = MakeSplit(dataset, config.preprocess, seed);
  CamModel cam;
  cam.split = {seed, config.preprocess.train_fraction,
               split.train.size() + split.eval.size(), split.train.size(),
               split.eval.size()};
  cam.config = ToJson(config);
  cam.labels = config.labels;
  cam.preprocess = Fit(split.train, config.preprocess);

  const Matrix x_train = cam.preprocess.Apply(split.train);
  const Matrix x_eval = cam.preprocess.Apply(split.eval);
  const std::vector<int>& y_train = split.train.labels;
  const std::vector<int>& y_eval = split.eval.labels;
  TrainConfig train_config = config.train;
  train_config.seed = seed;

  // Structure: every node, concept subtrees, no root edges.
  QafModel structure;
  structure.set_embedding_dim(embeddings.dim());
  structure.set_feature_order(cam.preprocess.FeatureNames());
  structure.AddNode({config.root_id, NodeKind::kRoot, config.root_label,
                     std::nullopt, std::nullopt, 0.5, 0});
  structure.set_root(config.root_id);
  if (auto it = config.labels.find(config.root_id); it != config.labels.end()) {
    structure.SetLabel(config.root_id, it->second.label,
                       it->second.description.empty()
                           ? std::nullopt
                           : std::optional(it->second.description));
  }
  EmbeddingTable meanings(embeddings.dim(), embeddings.provenance());
  Columns cols;
  std::vector<std::string> frontier = structure.feature_order();
  for (std::size_t c = 0; c < frontier.size(); ++c) {
    const std::string& id = frontier[c];
    ArgumentNode n{id, NodeKind::kFeature, id, std::nullopt,
                   embeddings.at(id), std::nullopt, 0};
    if (auto it = config.labels.find(id); it != config.labels.end()) {
      n.label = it->second.label;
      if (!it->second.description.empty()) n.description = it->second.description;
    }
    structure.AddNode(std::move(n));
    meanings.Add(id, embeddings.at(id));
    cols.train[id] = x_train.column(c);
    cols.eval[id] = x_eval.column(c);
  }
  const std::string eval_split =
      "held-out eval split, seed " + std::to_string(seed) + ", " +
      std::to_string(split.eval.size()) + " rows";

  auto fit_stage = [&](const QafModel& base_structure,
                       const std::vector<std::string>& front) {
    Stage s;
    s.frontier = front;
    const LinearFit fit = TrainBase(
        FrontierMatrix(cols.train, front, y_train.size()), y_train,
        train_config);
    if (!fit.trace.converged) {
      spdlog::warn("base fit did not reach gradient tolerance ({} iterations)",
                   fit.trace.iterations);
    }
    s.model = WithTopLayer(base_structure, front, fit);
    s.auc = EvalAuc(s.model, x_eval, y_eval);
    s.fit = fit;
    return s;
  };

  Stage current = fit_stage(structure, frontier);
  cam.round0_org_auc = current.auc;

  for (int round = 0; round < config.max_rounds; ++round) {
    RoundReport report;
    report.round = round;
    report.frontier = current.frontier;
    report.eval_split = eval_split;

    // (a) org model over the current frontier; the previous round's
    // consolidated stage is exactly this fit.
    const Matrix f_train =
        FrontierMatrix(cols.train, current.frontier, y_train.size());
    const LinearFit base = current.fit;
    const QafModel org = current.model;
    const double auc_org = current.auc;
    report.base_trace = base.trace;
    report.auc_org = auc_org;

    // (b) semantic mining.
    const std::vector<ConceptCandidate> candidates = ProposeGroups(
        current.frontier, meanings, config.threshold, round + 1);

    // (c) field-wise fit and filter, each against the same org model.
    struct Kept {
      AbstractedConcept concept_node;
      FieldWiseFit fit;
      double auc;
      std::size_t report_index;
    };
    std::vector<Kept> kept;
    for (const ConceptCandidate& cand : candidates) {
      CandidateReport cr;
      cr.id = cand.id;
      cr.children = cand.children;
      cr.similarity = cand.similarity;
      cr.mixed = structure.node(cand.children.first).kind !=
                 structure.node(cand.children.second).kind;
      cr.auc_org = auc_org;

      const auto pos = [&](const std::string& id) {
        return static_cast<std::size_t>(
            std::find(current.frontier.begin(), current.frontier.end(), id) -
            current.frontier.begin());
      };
      const FieldWiseFit fit =
          TrainFieldWise(base, pos(cand.children.first),
                         pos(cand.children.second), f_train, y_train,
                         train_config);
      cr.w_c = fit.w_c();
      cr.w_left = fit.w_left();
      cr.w_right = fit.w_right();
      cr.b_c = fit.b_c();
      cr.trace = fit.trace;

      AbstractedConcept ac = AbstractConcept(cand, &config.labels, &embeddings,
                                             &structure, round + 1);
      if (std::abs(fit.w_c()) < kPruneEpsilon ||
          (std::abs(fit.w_left()) < kPruneEpsilon &&
           std::abs(fit.w_right()) < kPruneEpsilon)) {
        cr.auc_candidate = auc_org;
        cr.keep = false;
        cr.note = "degenerate fit: concept carries no signed edge";
        report.candidates.push_back(std::move(cr));
        continue;
      }

      QafModel with = org;
      with.AddNode(ac.node);
      with.AddEdge(ac.left);
      with.AddEdge(ac.right);
      for (const std::string& child :
           {cand.children.first, cand.children.second}) {
        if (with.FindEdge(child, with.root())) with.RemoveEdge(child, with.root());
      }
      with.AddEdge({cand.id, with.root(), 0.0});
      with = Instantiate(with, cand.id, fit);
      cr.auc_candidate = EvalAuc(with, x_eval, y_eval);
      cr.keep = FilterConcept(cr.auc_candidate, auc_org) == FilterDecision::kKeep;
      if (cr.keep) {
        kept.push_back({std::move(ac), fit, cr.auc_candidate,
                        report.candidates.size()});
      }
      report.candidates.push_back(std::move(cr));
    }

    // (d) integrate kept candidates and retrain the top layer.
    auto integrate = [&](const std::vector<const Kept*>& admitted,
                         QafModel& out_structure,
                         std::vector<std::string>& out_frontier) {
      out_structure = structure;
      std::vector<std::string> grouped;
      for (const Kept* k : admitted) {
        ArgumentNode node = k->concept_node.node;
        node.base_score = ClampBaseScore(Logistic(k->fit.b_c()));
        out_structure.AddNode(std::move(node));
        Edge left = k->concept_node.left;
        Edge right = k->concept_node.right;
        left.weight = k->fit.w_left();
        right.weight = k->fit.w_right();
        out_structure.AddEdge(left);
        out_structure.AddEdge(right);
        grouped.push_back(left.child);
        grouped.push_back(right.child);
      }
      out_structure.PruneZeroEdges();
      out_frontier.clear();
      for (const std::string& id : current.frontier) {
        if (std::find(grouped.begin(), grouped.end(), id) == grouped.end()) {
          out_frontier.push_back(id);
        }
      }
      for (const Kept* k : admitted) {
        out_frontier.push_back(k->concept_node.node.id);
      }
      // Concept columns come from the reasoner over the frozen subtrees.
      QafModel probe = out_structure;
      const CompiledQaf compiled(probe);
      for (const Kept* k : admitted) {
        const std::string& id = k->concept_node.node.id;
        cols.train[id] = compiled.NodeColumn(x_train, id);
        cols.eval[id] = compiled.NodeColumn(x_eval, id);
      }
      return fit_stage(out_structure, out_frontier);
    };

    if (kept.empty()) {
      report.post_frontier = current.frontier;
      report.consolidated_auc = auc_org;
      cam.rounds.push_back(std::move(report));
      break;
    }

    std::vector<const Kept*> all;
    for (const Kept& k : kept) all.push_back(&k);
    QafModel next_structure;
    std::vector<std::string> next_frontier;
    Stage next = integrate(all, next_structure, next_frontier);
    std::vector<const Kept*> admitted = all;

    if (next.auc < auc_org) {
      report.readmitted = true;
      std::vector<const Kept*> order = all;
      std::stable_sort(order.begin(), order.end(),
                       [](const Kept* a, const Kept* b) { return a->auc > b->auc; });
      admitted.clear();
      Stage best;
      QafModel best_structure;
      std::vector<std::string> best_frontier;
      bool have_best = false;
      for (const Kept* k : order) {
        std::vector<const Kept*> trial = admitted;
        trial.push_back(k);
        QafModel s;
        std::vector<std::string> f;
        Stage t = integrate(trial, s, f);
        if (t.auc >= auc_org) {
          admitted = std::move(trial);
          best = std::move(t);
          best_structure = std::move(s);
          best_frontier = std::move(f);
          have_best = true;
        }
      }
      if (have_best) {
        next = std::move(best);
        next_structure = std::move(best_structure);
        next_frontier = std::move(best_frontier);
      }
    }

    for (const Kept* k : admitted) {
      report.candidates[k->report_index].admitted = true;
    }
    for (const Kept& k : kept) {
      CandidateReport& cr = report.candidates[k.report_index];
      if (!cr.admitted) cr.note = "kept but not re-admitted after retrain";
    }

    if (admitted.empty()) {
      report.post_frontier = current.frontier;
      report.consolidated_auc = auc_org;
      cam.rounds.push_back(std::move(report));
      break;
    }

    structure = std::move(next_structure);
    for (const Kept* k : admitted) {
      meanings.Add(k->concept_node.node.id, *k->concept_node.node.meaning);
    }
    current = std::move(next);
    report.post_frontier = current.frontier;
    report.consolidated_auc = current.auc;
    cam.rounds.push_back(std::move(report));
  }

  cam.qaf = current.model;
  cam.eval_auc = current.auc;

  for (const auto& [id, l] : config.labels) {
    if (!cam.qaf.contains(id)) {
      spdlog::info("label map entry '{}' does not match any node", id);
    }
  }
  return cam;
}

Metrics EvaluateModel(const CamModel& cam, const RawDataset& split) {
  PreprocessConfig pc;
  if (cam.config.contains("preprocess")) {
    pc = PreprocessConfigFromJson(cam.config.at("preprocess"));
  }
  const RawDataset data = DropEmptyRows(split, pc);
  const Matrix x = cam.preprocess.Apply(data);
  Metrics m;
  m.n = data.size();
  for (int y : data.labels) m.positives += static_cast<std::size_t>(y == 1);
  m.auc = Auc(CompiledQaf(cam.qaf).Predict(x), data.labels);
  return m;
}

Metrics EvaluateBaseline(const RawDataset& dataset, const PipelineConfig& config,
                         std::uint64_t seed) {
  const SplitData split = MakeSplit(dataset, config.preprocess, seed);
  const PreprocessModel pre = Fit(split.train, config.preprocess);
  TrainConfig tc = config.train;
  tc.seed = seed;
  const LinearFit fit = TrainBase(pre.Apply(split.train), split.train.labels, tc);
  const Matrix x = pre.Apply(split.eval);
  std::vector<double> scores(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) scores[r] = fit.Forward(x.row(r));
  Metrics m;
  m.n = x.rows();
  for (int y : split.eval.labels) m.positives += static_cast<std::size_t>(y == 1);
  m.auc = Auc(scores, split.eval.labels);
  return m;
}

nlohmann::json ToJson(const RoundReport& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (const CandidateReport& c : r.candidates) {
    cands.push_back({{"id", c.id},
                     {"children", {c.children.first, c.children.second}},
                     {"similarity", c.similarity},
                     {"mixed", c.mixed},
                     {"auc_candidate", c.auc_candidate},
                     {"auc_org", c.auc_org},
                     {"decision", c.keep ? "keep" : "drop"},
                     {"admitted", c.admitted},
                     {"note", c.note},
                     {"w_c", c.w_c},
                     {"w_left", c.w_left},
                     {"w_right", c.w_right},
                     {"b_c", c.b_c},
                     {"trace", ToJson(c.trace)}});
  }
  return {{"round", r.round},
          {"frontier", r.frontier},
          {"base_trace", ToJson(r.base_trace)},
          {"auc_org", r.auc_org},
          {"candidates", std::move(cands)},
          {"readmitted", r.readmitted},
          {"post_frontier", r.post_frontier},
          {"consolidated_auc", r.consolidated_auc},
          {"eval_split", r.eval_split}};
}

namespace {

OptimizerTrace TraceFromJson(const nlohmann::json& j) {
  OptimizerTrace t;
  t.loss = j.at("loss").get<std::vector<double>>();
  t.gradient_norm = j.at("gradient_norm").get<std::vector<double>>();
  t.iterations = j.at("iterations").get<int>();
  t.converged = j.at("converged").get<bool>();
  return t;
}

RoundReport RoundReportFromJson(const nlohmann::json& j) {
  RoundReport r;
  r.round = j.at("round").get<int>();
  r.frontier = j.at("frontier").get<std::vector<std::string>>();
  r.base_trace = TraceFromJson(j.at("base_trace"));
  r.auc_org = j.at("auc_org").get<double>();
  for (const auto& c : j.at("candidates")) {
    CandidateReport cr;
    cr.id = c.at("id").get<std::string>();
    const auto ch = c.at("children").get<std::vector<std::string>>();
    cr.children = {ch.at(0), ch.at(1)};
    cr.similarity = c.at("similarity").get<double>();
    cr.mixed = c.at("mixed").get<bool>();
    cr.auc_candidate = c.at("auc_candidate").get<double>();
    cr.auc_org = c.at("auc_org").get<double>();
    cr.keep = c.at("decision").get<std::string>() == "keep";
    cr.admitted = c.at("admitted").get<bool>();
    cr.note = c.at("note").get<std::string>();
    cr.w_c = c.at("w_c").get<double>();
    cr.w_left = c.at("w_left").get<double>();
    cr.w_right = c.at("w_right").get<double>();
    cr.b_c = c.at("b_c").get<double>();
    cr.trace = TraceFromJson(c.at("trace"));
    r.candidates.push_back(std::move(cr));
  }
  r.readmitted = j.at("readmitted").get<bool>();
  r.post_frontier = j.at("post_frontier").get<std::vector<std::string>>();
  r.consolidated_auc = j.at("consolidated_auc").get<double>();
  r.eval_split = j.at("eval_split").get<std::string>();
  return r;
}

}  // namespace

nlohmann::json ToJson(const CamModel& m) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundReport& r : m.rounds) rounds.push_back(ToJson(r));
  return {{"schema_version", kCamSchemaVersion},
          {"qaf", ToJson(m.qaf)},
          {"preprocess", ToJson(m.preprocess)},
          {"rounds", std::move(rounds)},
          {"config", m.config},
          {"split",
           {{"seed", m.split.seed},
            {"train_fraction", m.split.train_fraction},
            {"rows", m.split.rows},
            {"train_rows", m.split.train_rows},
            {"eval_rows", m.split.eval_rows}}},
          {"metrics",
           {{"eval_auc", m.eval_auc}, {"round0_org_auc", m.round0_org_auc}}},
          {"labels", ToJson(m.labels)}};
}

CamModel CamModelFromJson(const nlohmann::json& j) {
  CamModel m;
  try {
    if (!j.contains("schema_version")) {
      throw Error(ErrorCode::kSchema, "CAM document is missing 'schema_version'");
    }
    if (j.at("schema_version").get<int>() != kCamSchemaVersion) {
      throw Error(ErrorCode::kSchema, "unknown CAM schema version");
    }
    if (!j.contains("qaf")) {
      throw Error(ErrorCode::kSchema, "CAM document is missing 'qaf'");
    }
    m.qaf = QafModelFromJson(j.at("qaf"));
    m.preprocess = PreprocessModelFromJson(j.at("preprocess"));
    for (const auto& r : j.value("rounds", nlohmann::json::array())) {
      m.rounds.push_back(RoundReportFromJson(r));
    }
    m.config = j.value("config", nlohmann::json::object());
    if (j.contains("split")) {
      const auto& s = j.at("split");
      m.split = {s.at("seed").get<std::uint64_t>(),
                 s.at("train_fraction").get<double>(),
                 s.at("rows").get<std::size_t>(),
                 s.at("train_rows").get<std::size_t>(),
                 s.at("eval_rows").get<std::size_t>()};
    }
    if (j.contains("metrics")) {
      m.eval_auc = j.at("metrics").at("eval_auc").get<double>();
      m.round0_org_auc = j.at("metrics").at("round0_org_auc").get<double>();
    }
    if (j.contains("labels")) m.labels = LabelMapFromJson(j.at("labels"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, e.what());
  }
  if (m.preprocess.columns.size() != m.qaf.feature_order().size()) {
    throw Error(ErrorCode::kSchema,
                "preprocess columns do not match the model's features");
  }
  return m;
}

std::string SerializeCam(const CamModel& model) {
  const ValidationReport report = Validate(model.qaf);
  if (!report.ok()) {
    throw Error(ErrorCode::kStructure,
                "refusing to serialize invalid model:\n" + report.ToString());
  }
  return ToJson(model).dump(2);
}

CamModel DeserializeCam(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
  return CamModelFromJson(j);
}

CamModel LoadCamModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCam(ss.str());
}

}  // namespace cam
