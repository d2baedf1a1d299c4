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

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cam/learner.hpp"

namespace cam::internal {

using Objective = std::function<LossAndGradient(std::span<const double>)>;

struct MinimizeOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;
  int history = 10;
};

// Limited-memory BFGS with backtracking. A step is accepted on the Armijo
// condition, or, once the predicted decrease is below what double precision
// can resolve, on plain non-increase of the loss combined with a smaller
// gradient. The recorded loss is therefore nonincreasing.
OptimizerTrace Minimize(const Objective& objective, std::vector<double>& x,
                        const MinimizeOptions& options);

double Norm(std::span<const double> v);

}  // namespace cam::internal
