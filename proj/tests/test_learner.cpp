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

#include <cmath>
#include <limits>
#include <random>

#include "cam/error.hpp"
#include "cam/learner.hpp"
#include "cam/reasoner.hpp"
#include "doctest.h"
#include "models.hpp"

using namespace cam;
using cam::testing::FlatFrontier;
using cam::testing::FlatStructure;
using cam::testing::LogisticLabels;
using cam::testing::RandomMatrix;
using cam::testing::WithConcept;

namespace {

double RelativeError(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

// Forward-only loss for the finite-difference oracles.
double BaseLoss(const std::vector<double>& p, const Matrix& x,
                const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double z = p.back();
    for (std::size_t c = 0; c < x.cols(); ++c) z += p[c] * x(r, c);
    const double s = Logistic(z);
    loss -= y[r] ? std::log(s) : std::log(1.0 - s);
  }
  return loss / static_cast<double>(x.rows());
}

double FieldLoss(const FieldWiseParams& p, const FieldWiseData& d) {
  double loss = 0.0;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    const double s = FieldWiseForward(p, d.offset[i], d.left[i], d.right[i]);
    loss -= d.labels[i] ? std::log(s) : std::log(1.0 - s);
  }
  return loss / static_cast<double>(d.labels.size());
}

}  // namespace

TEST_CASE("logistic values") {
  CHECK(Logistic(0.0) == 0.5);
  CHECK(Logistic(-1000.0) == 0.0);
  CHECK(Logistic(1000.0) == 1.0);
  CHECK(Logistic(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(std::isfinite(Softplus(1000.0)));
  CHECK(Softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("separable pair reaches training AUC 1") {
  Matrix x(2, 1);
  x(0, 0) = 0.0;
  x(1, 0) = 1.0;
  const std::vector<int> y{0, 1};
  const LinearFit fit = TrainBase(x, y, TrainConfig{});
  const std::vector<double> s{fit.Forward(x.row(0)), fit.Forward(x.row(1))};
  CHECK(Auc(s, y) == 1.0);
  CHECK(fit.weights[0] > 0.0);
}

TEST_CASE("all-zero column keeps its weight at zero") {
  std::mt19937_64 rng(1);
  Matrix x = RandomMatrix(rng, 200, 3);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 1) = 0.0;
  const auto y = LogisticLabels(rng, x, {2.0, 0.0, -1.0}, 0.0);
  const LinearFit fit = TrainBase(x, y, TrainConfig{});
  CHECK(fit.weights[1] == 0.0);
  const std::vector<double> p{0.3, -0.2, 0.7, 0.1};
  CHECK(LogisticLossGradient(p, x, y).gradient[1] == 0.0);
}

TEST_CASE("zero inputs with balanced labels give zero bias gradient") {
  Matrix x(4, 2, 0.0);
  const std::vector<int> y{0, 1, 0, 1};
  const std::vector<double> p{0.0, 0.0, 0.0};
  const LossAndGradient g = LogisticLossGradient(p, x, y);
  CHECK(g.gradient[2] == 0.0);
  CHECK(g.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("single-sample gradients match finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = RandomMatrix(rng, 1, 4);
    const std::vector<int> y{static_cast<int>(rng() % 2)};
    std::vector<double> p(5);
    for (double& v : p) v = normal(rng);
    const auto g = LogisticLossGradient(p, x, y).gradient;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto hi = p, lo = p;
      hi[k] += h;
      lo[k] -= h;
      const double fd = (BaseLoss(hi, x, y) - BaseLoss(lo, x, y)) / (2 * h);
      CHECK(RelativeError(g[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("field-wise chain rule matches finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    FieldWiseData d;
    const Matrix x = RandomMatrix(rng, 16, 2);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      d.offset.push_back(normal(rng));
      d.left.push_back(x(r, 0));
      d.right.push_back(x(r, 1));
      d.labels.push_back(static_cast<int>(rng() % 2));
    }
    const FieldWiseParams p{normal(rng), normal(rng), normal(rng), normal(rng)};
    const auto g = FieldWiseLossGradient(p, d).gradient;
    // Explicit form of the w'_j term.
    double wj = 0.0;
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      const double inner = Logistic(p[kWj] * d.left[i] + p[kWk] * d.right[i] + p[kBc]);
      const double s = Logistic(d.offset[i] + p[kWc] * inner);
      wj += (s - d.labels[i]) * p[kWc] * inner * (1 - inner) * d.left[i];
    }
    wj /= static_cast<double>(d.labels.size());
    CHECK(RelativeError(g[kWj], wj) < 1e-12);
    for (std::size_t k = 0; k < 4; ++k) {
      FieldWiseParams hi = p, lo = p;
      hi[k] += h;
      lo[k] -= h;
      const double fd = (FieldLoss(hi, d) - FieldLoss(lo, d)) / (2 * h);
      CHECK(RelativeError(g[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("field-wise start drops the grouped direct terms") {
  std::mt19937_64 rng(4);
  const Matrix x = RandomMatrix(rng, 50, 4);
  const auto y = LogisticLabels(rng, x, {1.0, -2.0, 0.5, 1.5}, -0.3);
  const LinearFit base = TrainBase(x, y, TrainConfig{});
  const FieldWiseData d = MakeFieldWiseData(base, 1, 3, x, y);
  const FieldWiseParams init{0.0, base.weights[1], base.weights[3], 0.0};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double z = base.bias + base.weights[0] * x(r, 0) + base.weights[2] * x(r, 2);
    CHECK(FieldWiseForward(init, d.offset[r], d.left[r], d.right[r]) ==
          doctest::Approx(Logistic(z)).epsilon(1e-14));
  }
}

TEST_CASE("field-wise training never touches frozen parameters") {
  std::mt19937_64 rng(5);
  const Matrix x = RandomMatrix(rng, 300, 5);
  const auto y = LogisticLabels(rng, x, {1.0, -2.0, 0.5, 1.5, 0.0}, -0.3);
  const LinearFit base = TrainBase(x, y, TrainConfig{});
  const LinearFit copy = base;
  for (OptimizerMode mode : {OptimizerMode::kExact, OptimizerMode::kEpochs}) {
    TrainConfig cfg;
    cfg.mode = mode;
    const FieldWiseFit fit = TrainFieldWise(base, 0, 2, x, y, cfg);
    CHECK(fit.frozen_weights == copy.weights);
    CHECK(fit.frozen_bias == copy.bias);
    CHECK(base.weights == copy.weights);
  }
  CHECK_THROWS_AS(TrainFieldWise(base, 2, 2, x, y, TrainConfig{}), Error);
}

TEST_CASE("exact-mode loss trace is nonincreasing") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = RandomMatrix(rng, 400, 6);
    const auto y = LogisticLabels(rng, x, {3, -2, 1, 0, -1, 2}, -1.0);
    const LinearFit base = TrainBase(x, y, TrainConfig{});
    const FieldWiseFit fw = TrainFieldWise(base, 1, 4, x, y, TrainConfig{});
    for (const OptimizerTrace* t : {&base.trace, &fw.trace}) {
      for (std::size_t i = 1; i < t->loss.size(); ++i) {
        CHECK(t->loss[i] <= t->loss[i - 1]);
      }
      if (t->converged) CHECK(t->gradient_norm.back() <= 1e-8);
    }
  }
}

TEST_CASE("single-class labels are rejected") {
  Matrix x(3, 1, 0.5);
  const std::vector<int> y{1, 1, 1};
  try {
    TrainBase(x, y, TrainConfig{});
    FAIL("expected a label error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLabel);
  }
}

TEST_CASE("instantiate writes weights, base score and prunes zeros") {
  QafModel m = FlatStructure(3);
  LinearFit fit;
  fit.weights = {0.5, 0.0, -1.25};
  fit.bias = 0.0;
  const QafModel out = Instantiate(m, FlatFrontier(3), fit);
  CHECK(*out.node("c_g").base_score == 0.5);
  CHECK(out.FindEdge("f0", "c_g")->weight == 0.5);
  CHECK(out.FindEdge("f1", "c_g") == nullptr);
  const ValidationReport r = Validate(out);
  CHECK(r.ok());
  CHECK(r.inert == std::vector<std::string>{"f1"});
}

TEST_CASE("grouped signal beats the linear baseline") {
  // y depends on a saturating interaction phi(5 a_j + 5 a_k - 5) of two
  // columns next to a plain linear term.
  std::mt19937_64 rng(7);
  auto make = [&](std::size_t n, Matrix& x, std::vector<int>& y) {
    x = RandomMatrix(rng, n, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    y.clear();
    for (std::size_t r = 0; r < n; ++r) {
      const double inner = Logistic(5 * x(r, 0) + 5 * x(r, 1) - 5);
      const double z = -4.0 + 2.0 * x(r, 2) + 8.0 * inner * inner * inner;
      y.push_back(unit(rng) < Logistic(4.0 * z) ? 1 : 0);
    }
  };
  Matrix x_train, x_eval;
  std::vector<int> y_train, y_eval;
  make(4000, x_train, y_train);
  make(2000, x_eval, y_eval);

  const LinearFit base = TrainBase(x_train, y_train, TrainConfig{});
  const FieldWiseFit fw = TrainFieldWise(base, 0, 1, x_train, y_train, TrainConfig{});
  std::vector<double> s_base, s_fw;
  for (std::size_t r = 0; r < x_eval.rows(); ++r) {
    s_base.push_back(base.Forward(x_eval.row(r)));
    s_fw.push_back(fw.Forward(x_eval.row(r)));
  }
  const double auc_base = Auc(s_base, y_eval);
  const double auc_fw = Auc(s_fw, y_eval);
  CHECK(auc_fw > auc_base);

  // Grid oracle on a downsampled training set: no grid point beats the
  // optimizer's loss.
  const std::size_t n = 800;
  Matrix xs(n, 3);
  std::vector<int> ys(y_train.begin(), y_train.begin() + n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) xs(r, c) = x_train(r, c);
  }
  const FieldWiseData d = MakeFieldWiseData(base, 0, 1, xs, ys);
  const FieldWiseFit small = TrainFieldWise(base, 0, 1, xs, ys, TrainConfig{});
  const double fitted = FieldLoss(small.params, d);
  double best = std::numeric_limits<double>::infinity();
  for (double wc = -2; wc <= 12; wc += 1.0) {
    for (double wj = -2; wj <= 14; wj += 2.0) {
      for (double wk = -2; wk <= 14; wk += 2.0) {
        for (double bc = -14; bc <= 2; bc += 2.0) {
          best = std::min(best, FieldLoss({wc, wj, wk, bc}, d));
        }
      }
    }
  }
  CHECK(fitted <= best + 1e-9);
}

TEST_CASE("train config json") {
  TrainConfig c;
  c.mode = OptimizerMode::kEpochs;
  c.step_size = 0.05;
  const TrainConfig back = TrainConfigFromJson(ToJson(c));
  CHECK(back.mode == OptimizerMode::kEpochs);
  CHECK(back.step_size == 0.05);
  CHECK_THROWS_AS(TrainConfigFromJson({{"mode", "adam"}}), Error);
}
