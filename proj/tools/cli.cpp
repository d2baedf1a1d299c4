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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cam/error.hpp"
#include "cam/pipeline.hpp"
#include "cam/reasoner.hpp"
#include "cam/service.hpp"
#include "httplib.h"

namespace cam::cli {

namespace {

namespace fs = std::filesystem;

struct CommandConfig {
  fs::path base_dir = ".";
  std::string dataset;
  std::string embeddings;
  std::string labels;
  std::string model;
  std::string reports;
  std::string out;
  std::string dump_csv;
  std::string instance;
  std::vector<std::uint64_t> seeds;
  std::optional<long> row;
  int port = 8080;
  bool baseline = false;
  nlohmann::json pipeline = nlohmann::json::object();
  AttackRanking ranking = AttackRanking::kMagnitude;
};

struct Overrides {
  std::string config;
  std::string dataset;
  std::string embeddings;
  std::string labels;
  std::string model;
  std::string reports;
  std::string out;
  std::string dump_csv;
  std::string instance;
  std::vector<std::uint64_t> seeds;
  std::optional<double> threshold;
  std::optional<int> port;
  std::optional<long> row;
  bool baseline = false;
};

nlohmann::json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, path + ": " + e.what());
  }
}

std::string Resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

CommandConfig LoadConfig(const Overrides& o) {
  CommandConfig c;
  if (!o.config.empty()) {
    const nlohmann::json j = ReadJson(o.config);
    c.base_dir = fs::path(o.config).parent_path();
    auto str = [&](const char* key) {
      return Resolve(c.base_dir, j.value(key, std::string()));
    };
    c.dataset = str("dataset");
    c.embeddings = str("embeddings");
    c.labels = str("labels");
    c.model = str("model");
    c.reports = str("reports");
    c.port = j.value("port", c.port);
    c.pipeline = j;
    if (j.contains("explain")) {
      const std::string r = j.at("explain").value("attack_ranking", "magnitude");
      if (r == "signed") {
        c.ranking = AttackRanking::kSigned;
      } else if (r != "magnitude") {
        throw Error(ErrorCode::kConfig, "unknown attack_ranking '" + r + "'");
      }
    }
  }
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.embeddings.empty()) c.embeddings = o.embeddings;
  if (!o.labels.empty()) c.labels = o.labels;
  if (!o.model.empty()) c.model = o.model;
  if (!o.reports.empty()) c.reports = o.reports;
  c.out = o.out;
  c.dump_csv = o.dump_csv;
  c.instance = o.instance;
  c.row = o.row;
  c.baseline = o.baseline;
  if (o.threshold) c.pipeline["threshold"] = *o.threshold;
  if (o.port) c.port = *o.port;
  if (c.port < 1024 || c.port > 65535) {
    throw Error(ErrorCode::kConfig, "port must be in [1024, 65535]");
  }
  if (!o.seeds.empty()) {
    c.seeds = o.seeds;
  } else if (c.pipeline.contains("preprocess") &&
             c.pipeline["preprocess"].contains("seeds")) {
    c.seeds = c.pipeline["preprocess"]["seeds"].get<std::vector<std::uint64_t>>();
  } else if (c.pipeline.contains("seeds")) {
    c.seeds = c.pipeline["seeds"].get<std::vector<std::uint64_t>>();
  } else {
    c.seeds = {0, 1, 2, 3, 4};
  }
  return c;
}

void Require(const std::string& value, const char* what) {
  if (value.empty()) {
    throw Error(ErrorCode::kConfig, std::string("missing required path: ") + what);
  }
}

PipelineConfig MakePipelineConfig(const CommandConfig& c) {
  PipelineConfig pc = PipelineConfigFromJson(c.pipeline);
  if (!c.labels.empty()) {
    for (auto& [id, l] : LoadLabelMap(c.labels)) pc.labels[id] = l;
  }
  return pc;
}

EmbeddingTable LoadEmbeddings(const CommandConfig& c) {
  if (c.embeddings.empty()) {
    throw Error(ErrorCode::kMissingMeaning,
                "no embeddings path given; every feature needs a meaning vector");
  }
  if (!fs::exists(c.embeddings)) {
    throw Error(ErrorCode::kMissingMeaning,
                "embeddings file '" + c.embeddings + "' does not exist");
  }
  return LoadEmbeddingTable(c.embeddings);
}

std::string SeedPath(const std::string& path, std::uint64_t seed,
                     bool multiple) {
  if (!multiple) return path;
  const fs::path p(path);
  return (p.parent_path() /
          (p.stem().string() + "_seed" + std::to_string(seed) +
           p.extension().string()))
      .string();
}

void WriteFile(const std::string& path, const std::string& text) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
}

int CmdPreprocess(const CommandConfig& c, std::ostream& out) {
  Require(c.dataset, "dataset");
  Require(c.out, "--out");
  const PipelineConfig pc = MakePipelineConfig(c);
  const RawDataset data = ReadCsv(c.dataset, pc.preprocess);
  const SplitData split = MakeSplit(data, pc.preprocess, c.seeds.front());
  const PreprocessModel model = Fit(split.train, pc.preprocess);
  WriteFile(c.out, ToJson(model).dump(2));
  out << "wrote preprocess model for " << model.columns.size()
      << " columns to " << c.out << "\n";
  if (!c.dump_csv.empty()) {
    const RawDataset kept = DropEmptyRows(data, pc.preprocess);
    const Matrix x = model.Apply(kept);
    std::ostringstream csv;
    const auto names = model.FeatureNames();
    for (std::size_t i = 0; i < names.size(); ++i) csv << names[i] << ",";
    csv << "label\n";
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (double v : x.row(r)) csv << fmt::format("{:.17g},", v);
      csv << kept.labels[r] << "\n";
    }
    WriteFile(c.dump_csv, csv.str());
  }
  return 0;
}

int CmdTrain(const CommandConfig& c, std::ostream& out) {
  const EmbeddingTable embeddings = LoadEmbeddings(c);
  Require(c.dataset, "dataset");
  Require(c.model, "model");
  const PipelineConfig pc = MakePipelineConfig(c);
  const RawDataset data = ReadCsv(c.dataset, pc.preprocess);
  const bool multiple = c.seeds.size() > 1;
  const std::string reports_path =
      c.reports.empty()
          ? (fs::path(c.model).parent_path() /
             (fs::path(c.model).stem().string() + ".rounds.jsonl"))
                .string()
          : c.reports;

  std::ostringstream reports;
  std::vector<double> aucs;
  for (std::uint64_t seed : c.seeds) {
    const CamModel cam = Build(data, embeddings, pc, seed);
    const std::string path = SeedPath(c.model, seed, multiple);
    WriteFile(path, SerializeCam(cam));
    for (const RoundReport& r : cam.rounds) {
      nlohmann::json line = ToJson(r);
      line["seed"] = seed;
      reports << line.dump() << "\n";
    }
    std::size_t concepts = 0;
    for (const ArgumentNode& n : cam.qaf.nodes()) {
      concepts += n.kind == NodeKind::kConcept ? 1 : 0;
    }
    out << fmt::format("seed {}: eval AUC {:.4f} (round-0 LR {:.4f}), {} rounds, {} concepts -> {}\n",
                       seed, cam.eval_auc, cam.round0_org_auc,
                       cam.rounds.size(), concepts, path);
    if (c.baseline) {
      const Metrics lr = EvaluateBaseline(data, pc, seed);
      out << fmt::format("seed {}: LR baseline AUC {:.4f}\n", seed, lr.auc);
    }
    aucs.push_back(cam.eval_auc);
  }
  WriteFile(reports_path, reports.str());

  double mean = 0.0;
  for (double a : aucs) mean += a;
  mean /= static_cast<double>(aucs.size());
  double var = 0.0;
  for (double a : aucs) var += (a - mean) * (a - mean);
  const double stddev =
      aucs.size() > 1 ? std::sqrt(var / static_cast<double>(aucs.size() - 1))
                      : 0.0;
  out << fmt::format("mean eval AUC {:.2f} (std {:.2f}) over {} seeds\n",
                     100.0 * mean, 100.0 * stddev, aucs.size());
  return 0;
}

int CmdEvaluate(const CommandConfig& c, std::ostream& out) {
  Require(c.model, "model");
  Require(c.dataset, "dataset");
  const CamModel cam = LoadCamModel(c.model);
  const PreprocessConfig pc =
      PreprocessConfigFromJson(cam.config.value("preprocess", nlohmann::json::object()));
  const RawDataset data = ReadCsv(c.dataset, pc);
  const SplitData split = MakeSplit(data, pc, cam.split.seed);
  const Metrics m = EvaluateModel(cam, split.eval);
  out << nlohmann::json{{"auc", m.auc}, {"n", m.n}, {"positives", m.positives},
                        {"seed", cam.split.seed}}
             .dump()
      << "\n";
  return 0;
}

int CmdPredict(const CommandConfig& c, std::ostream& out) {
  Require(c.model, "model");
  Require(c.dataset, "dataset");
  const ModelService service(LoadCamModel(c.model));
  const PreprocessConfig pc = PreprocessConfigFromJson(
      service.model().config.value("preprocess", nlohmann::json::object()));
  const RawDataset data = ReadCsv(c.dataset, pc, /*require_label=*/false);
  out << "row,score\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (c.row && static_cast<std::size_t>(*c.row) != r) continue;
    out << r << "," << fmt::format("{:.17g}", service.Score(service.MakeInstance(data.rows[r])))
        << "\n";
  }
  return 0;
}

Instance LoadInstance(const ModelService& service, const CommandConfig& c) {
  if (!c.instance.empty()) {
    const nlohmann::json j = ReadJson(c.instance);
    return service.MakeInstance(j.contains("features") ? j.at("features") : j);
  }
  Require(c.dataset, "dataset or --instance");
  const PreprocessConfig pc = PreprocessConfigFromJson(
      service.model().config.value("preprocess", nlohmann::json::object()));
  const RawDataset data = ReadCsv(c.dataset, pc, /*require_label=*/false);
  const long row = c.row.value_or(0);
  if (row < 0 || static_cast<std::size_t>(row) >= data.size()) {
    throw Error(ErrorCode::kNotFound, "row " + std::to_string(row) +
                                          " is out of range");
  }
  return service.MakeInstance(data.rows[static_cast<std::size_t>(row)]);
}

int CmdExplain(const CommandConfig& c, std::istream& in, std::ostream& out) {
  Require(c.model, "model");
  ExplainOptions options;
  options.attack_ranking = c.ranking;
  const ModelService service(LoadCamModel(c.model), options);
  const Instance instance = LoadInstance(service, c);
  RunDialogue(service, instance, in, out);
  return 0;
}

int CmdServe(const CommandConfig& c, std::ostream& out) {
  Require(c.model, "model");
  ExplainOptions options;
  options.attack_ranking = c.ranking;
  const ModelService service(LoadCamModel(c.model), options);
  httplib::Server server;
  RegisterRoutes(server, service);
  out << "serving " << c.model << " on port " << c.port << "\n";
  out.flush();
  if (!server.listen("0.0.0.0", c.port)) {
    throw Error(ErrorCode::kIo, "cannot listen on port " + std::to_string(c.port));
  }
  return 0;
}

void ConfigureLogging() {
  const char* level = std::getenv("CAM_LOG");
  const std::string name = level ? level : "error";
  if (name == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (name == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::err);
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err) {
  ConfigureLogging();
  CLI::App app{"Concept-and-argumentation models for tabular data", "cam"};
  app.require_subcommand(1);
  Overrides o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--dataset", o.dataset, "CSV dataset");
    sub->add_option("--model", o.model, "model document path");
  };

  CLI::App* pre = app.add_subcommand("preprocess", "fit and dump the feature transforms");
  common(pre);
  pre->add_option("--out", o.out, "preprocess model output")->required();
  pre->add_option("--dump-csv", o.dump_csv, "write the transformed dataset");
  pre->add_option("--seed", o.seeds, "split seed");

  CLI::App* train = app.add_subcommand("train", "build a model per seed");
  common(train);
  train->add_option("--embeddings", o.embeddings, "embedding table JSON");
  train->add_option("--labels", o.labels, "label map JSON");
  train->add_option("--reports", o.reports, "round reports (JSON lines)");
  train->add_option("--seed", o.seeds, "seeds (repeatable)");
  train->add_option("--threshold", o.threshold, "grouping threshold");
  train->add_flag("--baseline", o.baseline, "also score plain LR per seed");

  CLI::App* eval = app.add_subcommand("evaluate", "AUC on the model's eval split");
  common(eval);

  CLI::App* predict = app.add_subcommand("predict", "score every CSV row");
  common(predict);
  predict->add_option("--row", o.row, "only this row");

  CLI::App* explain = app.add_subcommand("explain", "interactive dialogue");
  common(explain);
  explain->add_option("--row", o.row, "dataset row to explain");
  explain->add_option("--instance", o.instance, "JSON {features:{...}}");

  CLI::App* serve = app.add_subcommand("serve", "HTTP service");
  common(serve);
  serve->add_option("--port", o.port, "listen port");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const CommandConfig c = LoadConfig(o);
    if (pre->parsed()) return CmdPreprocess(c, out);
    if (train->parsed()) return CmdTrain(c, out);
    if (eval->parsed()) return CmdEvaluate(c, out);
    if (predict->parsed()) return CmdPredict(c, out);
    if (explain->parsed()) return CmdExplain(c, in, out);
    if (serve->parsed()) return CmdServe(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cam::cli
