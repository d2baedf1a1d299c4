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

#include "lbfgs.hpp"

#include <cmath>
#include <deque>

namespace cam::internal {

namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

std::vector<double> Direction(const std::deque<Correction>& memory,
                              std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    const Correction& c = memory[i];
    alpha[i] = c.rho * Dot(c.s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * c.y[k];
  }
  if (!memory.empty()) {
    const Correction& last = memory.back();
    const double gamma = Dot(last.s, last.y) / Dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const Correction& c = memory[i];
    const double beta = c.rho * Dot(c.y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += c.s[k] * (alpha[i] - beta);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

OptimizerTrace Minimize(const Objective& objective, std::vector<double>& x,
                        const MinimizeOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  OptimizerTrace trace;
  LossAndGradient cur = objective(x);
  double gnorm = Norm(cur.gradient);
  trace.loss.push_back(cur.loss);
  trace.gradient_norm.push_back(gnorm);
  if (gnorm <= options.tolerance) {
    trace.converged = true;
    return trace;
  }

  std::deque<Correction> memory;
  std::vector<double> trial(x.size());
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<double> d = Direction(memory, cur.gradient);
    double slope = Dot(cur.gradient, d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = cur.gradient;
      for (double& v : d) v = -v;
      slope = -gnorm * gnorm;
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    bool accepted = false;
    LossAndGradient next;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] + step * d[k];
      next = objective(trial);
      if (std::isfinite(next.loss)) {
        const bool armijo = next.loss <= cur.loss + kArmijo * step * slope;
        const bool flat = next.loss <= cur.loss &&
                          Norm(next.gradient) < gnorm;
        if (armijo || flat) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Correction c;
    c.s.resize(x.size());
    c.y.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      c.s[k] = trial[k] - x[k];
      c.y[k] = next.gradient[k] - cur.gradient[k];
    }
    const double sy = Dot(c.s, c.y);
    if (sy > 1e-16 * Norm(c.s) * Norm(c.y) && sy > 0.0) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > options.history) {
        memory.pop_front();
      }
    }

    x = trial;
    cur = std::move(next);
    gnorm = Norm(cur.gradient);
    trace.loss.push_back(cur.loss);
    trace.gradient_norm.push_back(gnorm);
    trace.iterations = iter + 1;
    if (gnorm <= options.tolerance) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace cam::internal
