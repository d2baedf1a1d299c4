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

// Field-wise learning. The base stage is a full-batch logistic regression over
// the frontier columns; the concept stage freezes that fit and learns only the
// four parameters of one candidate concept:
//
//   S = phi(sum_{i != j,k} w_i a_i + b_g + w_c * phi(w'_j a_j + w'_k a_k + b_c))
//
// Both stages minimize mean binary cross-entropy with an optional l2 term on
// the weights (never on biases).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cam/matrix.hpp"
#include "cam/qaf.hpp"
#include "json.hpp"

namespace cam {

// Numerically stable for any finite z.
double Logistic(double z);
// log(1 + exp(z)) without overflow.
double Softplus(double z);

enum class OptimizerMode { kExact, kEpochs };

struct TrainConfig {
  OptimizerMode mode = OptimizerMode::kExact;
  int max_iterations = 500;
  double tolerance = 1e-8;
  double l2 = 0.0;
  int epochs = 5;
  std::size_t batch_size = 256;
  double step_size = 0.1;
  std::uint64_t seed = 0;
  int history = 10;
};

TrainConfig TrainConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const TrainConfig& config);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Parameters are [w_1 .. w_n, b]. Rows of `x` are instances.
LossAndGradient LogisticLossGradient(std::span<const double> params,
                                     const Matrix& x,
                                     std::span<const int> labels,
                                     double l2 = 0.0);

struct FieldWiseData {
  // Frozen contribution per row: sum_{i != j,k} w_i a_i + b_g.
  std::vector<double> offset;
  std::vector<double> left;   // a_j
  std::vector<double> right;  // a_k
  std::vector<int> labels;
};

// Parameter order for the trainable block.
enum FieldWiseParam : std::size_t { kWc = 0, kWj = 1, kWk = 2, kBc = 3 };
using FieldWiseParams = std::array<double, 4>;

double FieldWiseForward(const FieldWiseParams& p, double offset, double left,
                        double right);
LossAndGradient FieldWiseLossGradient(const FieldWiseParams& p,
                                      const FieldWiseData& data,
                                      double l2 = 0.0);

struct OptimizerTrace {
  std::vector<double> loss;
  std::vector<double> gradient_norm;
  int iterations = 0;
  bool converged = false;
};

struct LinearFit {
  std::vector<double> weights;
  double bias = 0.0;
  OptimizerTrace trace;

  double Forward(std::span<const double> row) const;
};

// Base stage. Always full-batch L-BFGS from zero. Non-convergence is reported
// through trace.converged, never thrown. Throws kLabel unless both classes
// are present.
LinearFit TrainBase(const Matrix& frontier, std::span<const int> labels,
                    const TrainConfig& config);

struct FieldWiseFit {
  std::vector<double> frozen_weights;
  double frozen_bias = 0.0;
  std::size_t left_index = 0;
  std::size_t right_index = 0;
  FieldWiseParams params{};
  OptimizerTrace trace;

  double w_c() const { return params[kWc]; }
  double w_left() const { return params[kWj]; }
  double w_right() const { return params[kWk]; }
  double b_c() const { return params[kBc]; }

  double Forward(std::span<const double> row) const;
};

FieldWiseData MakeFieldWiseData(const LinearFit& base, std::size_t left,
                                std::size_t right, const Matrix& frontier,
                                std::span<const int> labels);

// Concept stage for the candidate whose children are frontier columns `left` and
// `right`. Starts from w_c = b_c = 0 and w'_j, w'_k copied from the base fit.
// Throws kStructure if the columns are out of range or equal.
FieldWiseFit TrainFieldWise(const LinearFit& base, std::size_t left,
                            std::size_t right, const Matrix& frontier,
                            std::span<const int> labels,
                            const TrainConfig& config);

// Writes the base fit onto the edges frontier[i] -> root and sets
// beta(root) = phi(b_g). Zero-weight edges are pruned. Throws kStructure if an
// edge is missing.
QafModel Instantiate(const QafModel& model,
                     std::span<const std::string> frontier,
                     const LinearFit& fit);

// Writes a field-wise fit onto the concept's subtree and its root edge.
QafModel Instantiate(const QafModel& model, const std::string& concept_id,
                     const FieldWiseFit& fit);

nlohmann::json ToJson(const OptimizerTrace& trace);

}  // namespace cam
