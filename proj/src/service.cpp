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

#include "cam/service.hpp"

#include <istream>
#include <ostream>

#include "cam/error.hpp"
#include "httplib.h"

namespace cam {

ModelService::ModelService(CamModel model, ExplainOptions options)
    : options_(options) {
  const ValidationReport report = Validate(model.qaf);
  if (!report.ok()) {
    throw Error(ErrorCode::kStructure, "model does not validate:\n" +
                                           report.ToString());
  }
  model_ = std::make_shared<const CamModel>(std::move(model));
  compiled_ = std::make_shared<const CompiledQaf>(model_->qaf);
  options_.labels = &model_->labels;
}

nlohmann::json ModelService::ModelDocument() const {
  nlohmann::json doc = ToJson(model_->qaf);
  for (auto& node : doc["nodes"]) {
    const std::string id = node["id"].get<std::string>();
    try {
      node["root_polarity"] = RootPolarity(model_->qaf, id);
    } catch (const Error&) {
      node["root_polarity"] = nullptr;
    }
  }
  return doc;
}

Instance ModelService::MakeInstance(const RawRow& row) const {
  Instance inst;
  inst.x = model_->preprocess.Apply(row);
  const auto& cols = model_->preprocess.columns;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    inst.raw[cols[i].name] = row[model_->preprocess.source_index[i]];
  }
  return inst;
}

Instance ModelService::MakeInstance(const nlohmann::json& features) const {
  if (!features.is_object()) {
    throw Error(ErrorCode::kMalformed, "'features' must be an object");
  }
  const PreprocessModel& pre = model_->preprocess;
  std::size_t width = 0;
  for (std::size_t s : pre.source_index) width = std::max(width, s + 1);
  RawRow row(width);
  for (const auto& [name, value] : features.items()) {
    std::size_t col = 0;
    try {
      col = pre.FindColumn(name);
    } catch (const Error&) {
      throw Error(ErrorCode::kMisaligned, "unknown feature '" + name + "'");
    }
    std::string cell;
    if (value.is_string()) {
      cell = value.get<std::string>();
    } else if (value.is_number()) {
      cell = value.dump();
    } else if (!value.is_null()) {
      throw Error(ErrorCode::kMalformed, "feature '" + name +
                                             "' must be a string or number");
    }
    row[pre.source_index[col]] = std::move(cell);
  }
  return MakeInstance(row);
}

StrengthAssignment ModelService::Strengths(const Instance& instance) const {
  const std::vector<double> s = compiled_->EvaluateAll(instance.x);
  StrengthAssignment out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.strength.emplace(compiled_->ids()[i], s[i]);
  }
  return out;
}

double ModelService::Score(const Instance& instance) const {
  return compiled_->Predict(instance.x);
}

nlohmann::json ModelService::PredictDocument(const Instance& instance) const {
  const StrengthAssignment s = Strengths(instance);
  return {{"strengths", s.strength}, {"score", s.at(model_->qaf.root())}};
}

std::string ModelService::ResolveNode(const std::string& query) const {
  if (model_->qaf.contains(query)) return query;
  for (const ArgumentNode& n : model_->qaf.nodes()) {
    if (n.label == query) return n.id;
  }
  throw Error(ErrorCode::kNotFound, "unknown node '" + query + "'");
}

ExplanationStep ModelService::Explain(const Instance& instance,
                                      const std::string& node) const {
  return cam::Explain(model_->qaf, Strengths(instance), ResolveNode(node),
                      instance, options_);
}

std::string RenderTurn(const ExplanationStep& step) {
  const std::string answer = step.empty() ? "{}" : step.Answer();
  return "user: " + step.Question() + "\nCAM: " + answer + "\n";
}

void RunDialogue(const ModelService& service, const Instance& instance,
                 std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    try {
      out << RenderTurn(service.Explain(instance, line));
    } catch (const Error& e) {
      out << "error: " << e.what() << "\n";
    }
    out.flush();
  }
}

namespace {

int StatusFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kMisaligned:
      return 422;
    default:
      return 400;
  }
}

void Reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
void Guarded(httplib::Response& res, Handler&& handler) {
  try {
    Reply(res, 200, handler());
  } catch (const Error& e) {
    Reply(res, StatusFor(e), {{"error", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    Reply(res, 400, {{"error", e.what()}});
  }
}

nlohmann::json ParseBody(const httplib::Request& req) {
  try {
    nlohmann::json body = nlohmann::json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::kMalformed, "body must be an object");
    return body;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
}

}  // namespace

void RegisterRoutes(httplib::Server& server, const ModelService& service) {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    Reply(res, 200, {{"status", "ok"}});
  });
  server.Get("/model", [&service](const httplib::Request&,
                                  httplib::Response& res) {
    Guarded(res, [&] { return service.ModelDocument(); });
  });
  server.Post("/predict", [&service](const httplib::Request& req,
                                     httplib::Response& res) {
    Guarded(res, [&] {
      const nlohmann::json body = ParseBody(req);
      if (!body.contains("features")) {
        throw Error(ErrorCode::kMalformed, "missing 'features'");
      }
      return service.PredictDocument(service.MakeInstance(body.at("features")));
    });
  });
  server.Post("/explain", [&service](const httplib::Request& req,
                                     httplib::Response& res) {
    Guarded(res, [&] {
      const nlohmann::json body = ParseBody(req);
      if (!body.contains("features") || !body.contains("node") ||
          !body.at("node").is_string()) {
        throw Error(ErrorCode::kMalformed, "need 'features' and 'node'");
      }
      const Instance inst = service.MakeInstance(body.at("features"));
      return ToJson(service.Explain(inst, body.at("node").get<std::string>()));
    });
  });
}

}  // namespace cam
