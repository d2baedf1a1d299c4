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

// Shared entry points for the command line and the HTTP service. Both surfaces
// go through ModelService, so identical inputs give identical bytes.

#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "cam/explainer.hpp"
#include "cam/pipeline.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace cam {

class ModelService {
 public:
  // Throws kStructure if the model does not validate.
  ModelService(CamModel model, ExplainOptions options = {});

  const CamModel& model() const { return *model_; }

  // Serialized QafModel with a root_polarity entry on every node (null for
  // the root and for detached nodes).
  nlohmann::json ModelDocument() const;

  // Raw record in dataset column order.
  Instance MakeInstance(const RawRow& row) const;
  // {"name": raw, ...}. Absent features count as missing; unknown names
  // throw kMisaligned.
  Instance MakeInstance(const nlohmann::json& features) const;

  StrengthAssignment Strengths(const Instance& instance) const;
  double Score(const Instance& instance) const;
  // {"strengths": {id: s}, "score": s(root)}
  nlohmann::json PredictDocument(const Instance& instance) const;
  ExplanationStep Explain(const Instance& instance,
                          const std::string& node) const;
  // Accepts a node id or a node label. Throws kNotFound.
  std::string ResolveNode(const std::string& query) const;

 private:
  std::shared_ptr<const CamModel> model_;
  std::shared_ptr<const CompiledQaf> compiled_;
  ExplainOptions options_;
};

// Reads one node query per line until end of input and writes the dialogue
// transcript. Unknown nodes produce an error line and the loop continues.
void RunDialogue(const ModelService& service, const Instance& instance,
                 std::istream& in, std::ostream& out);

std::string RenderTurn(const ExplanationStep& step);

// GET /health, GET /model, POST /predict, POST /explain.
void RegisterRoutes(httplib::Server& server, const ModelService& service);

}  // namespace cam
