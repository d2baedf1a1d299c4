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

#include "cam/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cam/error.hpp"
#include "lbfgs.hpp"

namespace cam {

double Logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "exact") {
        c.mode = OptimizerMode::kExact;
      } else if (mode == "epochs") {
        c.mode = OptimizerMode::kEpochs;
      } else {
        throw Error(ErrorCode::kConfig, "unknown optimizer mode '" + mode + "'");
      }
    }
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.l2 = j.value("l2", c.l2);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.step_size = j.value("step_size", c.step_size);
    c.seed = j.value("seed", c.seed);
    c.history = j.value("history", c.history);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (!(c.tolerance > 0.0)) throw Error(ErrorCode::kConfig, "tolerance must be > 0");
  if (c.epochs < 1) throw Error(ErrorCode::kConfig, "epochs must be >= 1");
  if (c.max_iterations < 1 || c.batch_size < 1 || c.history < 1) {
    throw Error(ErrorCode::kConfig, "iteration counts must be positive");
  }
  if (c.l2 < 0.0) throw Error(ErrorCode::kConfig, "l2 must be nonnegative");
  return c;
}

nlohmann::json ToJson(const TrainConfig& c) {
  return {{"mode", c.mode == OptimizerMode::kExact ? "exact" : "epochs"},
          {"max_iterations", c.max_iterations},
          {"tolerance", c.tolerance},
          {"l2", c.l2},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"step_size", c.step_size},
          {"seed", c.seed},
          {"history", c.history}};
}

LossAndGradient LogisticLossGradient(std::span<const double> params,
                                     const Matrix& x,
                                     std::span<const int> labels, double l2) {
  const std::size_t n = x.cols();
  LossAndGradient out;
  out.gradient.assign(n + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double z = params[n];
    for (std::size_t i = 0; i < n; ++i) z += params[i] * row[i];
    const double y = labels[r];
    out.loss += Softplus(z) - y * z;
    const double residual = Logistic(z) - y;
    for (std::size_t i = 0; i < n; ++i) out.gradient[i] += residual * row[i];
    out.gradient[n] += residual;
  }
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  if (l2 > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      out.loss += 0.5 * l2 * params[i] * params[i];
      out.gradient[i] += l2 * params[i];
    }
  }
  return out;
}

double FieldWiseForward(const FieldWiseParams& p, double offset, double left,
                        double right) {
  const double hidden = Logistic(p[kWj] * left + p[kWk] * right + p[kBc]);
  return Logistic(offset + p[kWc] * hidden);
}

namespace {

template <typename Rows>
LossAndGradient FieldWiseOver(const FieldWiseParams& p,
                              const FieldWiseData& data, const Rows& rows,
                              std::size_t count, double l2) {
  LossAndGradient out;
  out.gradient.assign(4, 0.0);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t r = rows(t);
    const double hidden =
        Logistic(p[kWj] * data.left[r] + p[kWk] * data.right[r] + p[kBc]);
    const double z = data.offset[r] + p[kWc] * hidden;
    const double y = data.labels[r];
    out.loss += Softplus(z) - y * z;
    const double residual = Logistic(z) - y;
    const double back = residual * p[kWc] * hidden * (1.0 - hidden);
    out.gradient[kWc] += residual * hidden;
    out.gradient[kWj] += back * data.left[r];
    out.gradient[kWk] += back * data.right[r];
    out.gradient[kBc] += back;
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  if (l2 > 0.0) {
    for (std::size_t i : {std::size_t{kWc}, std::size_t{kWj}, std::size_t{kWk}}) {
      out.loss += 0.5 * l2 * p[i] * p[i];
      out.gradient[i] += l2 * p[i];
    }
  }
  return out;
}

void RequireBothClasses(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == 0) {
      neg = true;
    } else {
      throw Error(ErrorCode::kLabel, "non-binary label");
    }
  }
  if (!pos || !neg) {
    throw Error(ErrorCode::kLabel, "training labels contain a single class");
  }
}

}  // namespace

LossAndGradient FieldWiseLossGradient(const FieldWiseParams& p,
                                      const FieldWiseData& data, double l2) {
  return FieldWiseOver(
      p, data, [](std::size_t t) { return t; }, data.labels.size(), l2);
}

double LinearFit::Forward(std::span<const double> row) const {
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * row[i];
  return Logistic(z);
}

LinearFit TrainBase(const Matrix& frontier, std::span<const int> labels,
                    const TrainConfig& config) {
  if (frontier.rows() != labels.size() || frontier.rows() == 0) {
    throw Error(ErrorCode::kMisaligned, "frontier rows and labels differ");
  }
  RequireBothClasses(labels);
  const std::size_t n = frontier.cols();
  std::vector<double> params(n + 1, 0.0);
  internal::MinimizeOptions options{config.max_iterations, config.tolerance,
                                    config.history};
  LinearFit fit;
  fit.trace = internal::Minimize(
      [&](std::span<const double> p) {
        return LogisticLossGradient(p, frontier, labels, config.l2);
      },
      params, options);
  fit.weights.assign(params.begin(), params.begin() + static_cast<long>(n));
  fit.bias = params[n];
  return fit;
}

double FieldWiseFit::Forward(std::span<const double> row) const {
  double offset = frozen_bias;
  for (std::size_t i = 0; i < frozen_weights.size(); ++i) {
    if (i == left_index || i == right_index) continue;
    offset += frozen_weights[i] * row[i];
  }
  return FieldWiseForward(params, offset, row[left_index], row[right_index]);
}

FieldWiseData MakeFieldWiseData(const LinearFit& base, std::size_t left,
                                std::size_t right, const Matrix& frontier,
                                std::span<const int> labels) {
  if (left == right || left >= frontier.cols() || right >= frontier.cols() ||
      base.weights.size() != frontier.cols()) {
    throw Error(ErrorCode::kStructure,
                "candidate children are not distinct frontier columns");
  }
  FieldWiseData data;
  data.offset.resize(frontier.rows());
  data.left.resize(frontier.rows());
  data.right.resize(frontier.rows());
  data.labels.assign(labels.begin(), labels.end());
  for (std::size_t r = 0; r < frontier.rows(); ++r) {
    const auto row = frontier.row(r);
    double offset = base.bias;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == left || i == right) continue;
      offset += base.weights[i] * row[i];
    }
    data.offset[r] = offset;
    data.left[r] = row[left];
    data.right[r] = row[right];
  }
  return data;
}

FieldWiseFit TrainFieldWise(const LinearFit& base, std::size_t left,
                            std::size_t right, const Matrix& frontier,
                            std::span<const int> labels,
                            const TrainConfig& config) {
  RequireBothClasses(labels);
  const FieldWiseData data =
      MakeFieldWiseData(base, left, right, frontier, labels);

  FieldWiseFit fit;
  fit.frozen_weights = base.weights;
  fit.frozen_bias = base.bias;
  fit.left_index = left;
  fit.right_index = right;
  fit.params = {0.0, base.weights[left], base.weights[right], 0.0};

  if (config.mode == OptimizerMode::kExact) {
    std::vector<double> x(fit.params.begin(), fit.params.end());
    internal::MinimizeOptions options{config.max_iterations, config.tolerance,
                                      config.history};
    fit.trace = internal::Minimize(
        [&](std::span<const double> p) {
          return FieldWiseLossGradient({p[0], p[1], p[2], p[3]}, data,
                                       config.l2);
        },
        x, options);
    std::copy(x.begin(), x.end(), fit.params.begin());
    return fit;
  }

  // Minibatch SGD with a fixed step, seeded reshuffle per epoch.
  std::vector<std::size_t> order(data.labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  auto record = [&] {
    const LossAndGradient full = FieldWiseLossGradient(fit.params, data, config.l2);
    fit.trace.loss.push_back(full.loss);
    fit.trace.gradient_norm.push_back(internal::Norm(full.gradient));
  };
  record();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t count =
          std::min(config.batch_size, order.size() - start);
      const LossAndGradient g = FieldWiseOver(
          fit.params, data, [&](std::size_t t) { return order[start + t]; },
          count, config.l2);
      for (std::size_t k = 0; k < 4; ++k) {
        fit.params[k] -= config.step_size * g.gradient[k];
      }
    }
    record();
    fit.trace.iterations = epoch + 1;
  }
  fit.trace.converged = fit.trace.gradient_norm.back() <= config.tolerance;
  return fit;
}

QafModel Instantiate(const QafModel& model,
                     std::span<const std::string> frontier,
                     const LinearFit& fit) {
  if (frontier.size() != fit.weights.size()) {
    throw Error(ErrorCode::kStructure, "fit width differs from frontier");
  }
  QafModel out = model;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    if (out.FindEdge(frontier[i], out.root()) == nullptr) {
      throw Error(ErrorCode::kStructure,
                  "no edge " + frontier[i] + " -> " + out.root());
    }
    out.SetEdgeWeight(frontier[i], out.root(), fit.weights[i]);
  }
  out.SetBaseScore(out.root(), Logistic(fit.bias));
  out.PruneZeroEdges();
  return out;
}

QafModel Instantiate(const QafModel& model, const std::string& concept_id,
                     const FieldWiseFit& fit) {
  QafModel out = model;
  const ArgumentNode& concept_node = out.node(concept_id);
  if (concept_node.kind != NodeKind::kConcept) {
    throw Error(ErrorCode::kStructure, concept_id + " is not a concept");
  }
  const auto children = out.ChildEdges(concept_id);
  if (children.size() != 2 || out.FindEdge(concept_id, out.root()) == nullptr) {
    throw Error(ErrorCode::kStructure,
                "concept " + concept_id +
                    " must have two children and a root edge");
  }
  const std::string left = children[0]->child;
  const std::string right = children[1]->child;
  out.SetEdgeWeight(left, concept_id, fit.w_left());
  out.SetEdgeWeight(right, concept_id, fit.w_right());
  out.SetEdgeWeight(concept_id, out.root(), fit.w_c());
  out.SetBaseScore(concept_id, Logistic(fit.b_c()));
  out.PruneZeroEdges();
  return out;
}

nlohmann::json ToJson(const OptimizerTrace& trace) {
  return {{"loss", trace.loss},
          {"gradient_norm", trace.gradient_norm},
          {"iterations", trace.iterations},
          {"converged", trace.converged}};
}

}  // namespace cam
