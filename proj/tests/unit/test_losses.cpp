// Copyright 2026 The rangeseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include "doctest.h"
#include "rangeseg/class_stats.hpp"
#include "rangeseg/error.hpp"
#include "rangeseg/loss_kernels.hpp"
#include "support/oracles.hpp"

using namespace rangeseg;

namespace {

Matrix random_probs(std::mt19937_64& gen, int rows, int cols) {
  const Matrix logits = oracle::random_matrix(gen, rows, cols, -2.0, 2.0);
  return oracle::softmax(logits);
}

std::vector<int> random_targets(std::mt19937_64& gen, int n, int k) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> t(static_cast<std::size_t>(n));
  for (auto& v : t) v = pick(gen);
  return t;
}

// Gradient checks perturb each probability entry independently; the kernels
// treat probs as free inputs so no simplex projection is needed.
double grad_error(const Matrix& x, const Matrix& analytic,
                  const std::function<double(const Matrix&)>& f) {
  const Matrix numeric = oracle::numeric_gradient(x, f, 1e-5);
  return oracle::relative_error(analytic, numeric);
}

ClassStats published_stats() {
  const ClassConfig cfg = semantic_kitti_config();
  std::vector<double> f(20, 0.0), sem(20, 0.0), ins(20, 0.0);
  for (std::size_t i = 0; i < oracle::kPublished.size(); ++i) {
    f[i + 1] = oracle::kPublished[i].f;
    sem[i + 1] = oracle::kPublished[i].sem;
    ins[i + 1] = oracle::kPublished[i].ins;
  }
  return stats_from_frequencies(f, sem, ins, 1e-3, cfg);
}

}  // namespace

TEST_CASE("focal loss reference values") {
  Matrix half(1, 2);
  half << 0.5, 0.5;
  std::vector<int> t0 = {0};
  CHECK(weighted_focal_loss(half, t0, 0.0, {}).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Matrix sure(3, 2);
  sure << 1, 0, 0, 1, 1, 0;
  std::vector<int> ts = {0, 1, 0};
  CHECK(weighted_focal_loss(sure, ts, 2.0, {}).value == 0.0);

  Matrix p9(1, 2);
  p9 << 0.9, 0.1;
  const double expected = -(0.1 * 0.1) * std::log(0.9);
  CHECK(weighted_focal_loss(p9, t0, 2.0, {}).value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.0010536).epsilon(1e-4));
}

TEST_CASE("focal loss clamps zero target probability") {
  Matrix p(2, 2);
  p << 0.0, 1.0, 0.5, 0.5;
  std::vector<int> t = {0, 0};
  const LossResult r = weighted_focal_loss(p, t, 2.0, {});
  CHECK(r.clamped == 1);
  CHECK(std::isfinite(r.value));
  CHECK(r.grad.allFinite());
  CHECK(r.value == doctest::Approx((-std::log(kProbFloor) + 0.25 * std::log(2.0)) / 2.0));
}

TEST_CASE("focal loss ignores excluded pixels") {
  Matrix p(2, 2);
  p << 0.3, 0.7, 0.8, 0.2;
  std::vector<int> t = {-1, 0};
  const LossResult r = weighted_focal_loss(p, t, 0.0, {}, -1);
  CHECK(r.value == doctest::Approx(-std::log(0.8)));
  CHECK(r.grad.row(0).isZero());
}

TEST_CASE("focal with gamma 0 and unit weights equals cross-entropy") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix p = random_probs(gen, 12, 5);
    const auto t = random_targets(gen, 12, 5);
    const double focal = weighted_focal_loss(p, t, 0.0, {}).value;
    CHECK(std::abs(focal - cross_entropy(p, t).value) < 1e-10);
    CHECK(std::abs(focal - oracle::focal_value(p, t, 0.0, {})) < 1e-10);
  }
}

TEST_CASE("focal loss matches the direct sum with class weights") {
  std::mt19937_64 gen(12);
  const Matrix p = random_probs(gen, 16, 4);
  const auto t = random_targets(gen, 16, 4);
  const std::vector<double> w = {0.5, 2.0, 1.0, 3.5};
  CHECK(weighted_focal_loss(p, t, 2.0, w).value ==
        doctest::Approx(oracle::focal_value(p, t, 2.0, w)).epsilon(1e-12));
}

TEST_CASE("balance strategies") {
  const ClassStats stats = published_stats();
  const auto none = focal_class_weights(stats, BalanceStrategy::kNone);
  const auto cls = focal_class_weights(stats, BalanceStrategy::kClass);
  const auto uni = focal_class_weights(stats, BalanceStrategy::kUnified);
  REQUIRE(none.size() == 19);
  for (std::size_t i = 0; i < 19; ++i) {
    CHECK(none[i] == 1.0);
    CHECK(cls[i] == doctest::Approx(stats.alpha[i + 1]));
    CHECK(uni[i] == doctest::Approx(stats.alpha[i + 1] * stats.beta[i + 1]));
    if (!stats.is_thing[i + 1]) CHECK(cls[i] == uni[i]);
  }

  // Stuff-only targets: C and U give the same loss.
  std::mt19937_64 gen(13);
  const Matrix p = random_probs(gen, 30, 19);
  std::uniform_int_distribution<int> stuff(8, 18);
  std::vector<int> t(30);
  for (auto& v : t) v = stuff(gen);
  CHECK(weighted_focal_loss(p, t, 2.0, cls).value == weighted_focal_loss(p, t, 2.0, uni).value);
}

TEST_CASE("focal loss gradient") {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix p = random_probs(gen, 8, 4);
    const auto t = random_targets(gen, 8, 4);
    const std::vector<double> w = {1.0, 2.0, 0.5, 4.0};
    const LossResult r = weighted_focal_loss(p, t, 2.0, w);
    const double err = grad_error(p, r.grad, [&](const Matrix& x) {
      return weighted_focal_loss(x, t, 2.0, w).value;
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("classification loss reference values") {
  Matrix uniform = Matrix::Zero(1, 3);
  std::vector<int> t0 = {0};
  CHECK(classification_loss(uniform, t0, 0.1).value == doctest::Approx(std::log(3.0)));

  Matrix confident(1, 3);
  confident << 60.0, 0.0, 0.0;
  CHECK(classification_loss(confident, t0, 0.1).value < 1e-20);

  Matrix two(2, 4);
  two << 1.0, 0.5, -0.3, 0.2, 0.1, -1.0, 0.7, 1.5;
  std::vector<int> t = {1, 3};  // second query is unmatched
  const Matrix sm = oracle::softmax(two);
  const double direct = (-std::log(sm(0, 1)) - 0.1 * std::log(sm(1, 3))) / 1.1;
  CHECK(classification_loss(two, t, 0.1).value == doctest::Approx(direct).epsilon(1e-12));
  CHECK(oracle::classification_value(two, t, 0.1) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("classification targets from matches") {
  std::vector<std::pair<int, int>> matches = {{2, 0}, {0, 1}};
  std::vector<int> classes = {5, 7};
  const auto t = class_targets_from_matches(4, 19, matches, classes);
  CHECK(t == std::vector<int>{7, 19, 5, 19});
}

TEST_CASE("classification loss gradient") {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix logits = oracle::random_matrix(gen, 6, 5, -3.0, 3.0);
    const auto t = random_targets(gen, 6, 5);
    const LossResult r = classification_loss(logits, t, 0.1);
    const double err = grad_error(logits, r.grad, [&](const Matrix& x) {
      return classification_loss(x, t, 0.1).value;
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("lovasz loss reference values") {
  Matrix perfect(3, 2);
  perfect << 1, 0, 0, 1, 1, 0;
  std::vector<int> t = {0, 1, 0};
  CHECK(lovasz_softmax(perfect, t).value == 0.0);

  // One binary problem, n foreground pixels, one wrong by margin m.
  for (int n = 1; n <= 6; ++n) {
    const double m = 0.37;
    std::vector<double> err(static_cast<std::size_t>(n), 0.0);
    std::vector<std::uint8_t> fg(static_cast<std::size_t>(n), 1);
    err[0] = m;
    CHECK(lovasz_binary(err, fg) == doctest::Approx(m / n).epsilon(1e-12));
    CHECK(oracle::lovasz_extension(err, fg) == doctest::Approx(m / n).epsilon(1e-12));
  }
}

TEST_CASE("lovasz binary matches the Choquet integral") {
  std::mt19937_64 gen(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<double> err(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> fg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      err[static_cast<std::size_t>(i)] = u(gen);
      fg[static_cast<std::size_t>(i)] = u(gen) < 0.5;
    }
    CHECK(lovasz_binary(err, fg) ==
          doctest::Approx(oracle::lovasz_extension(err, fg)).epsilon(1e-12));
  }
}

TEST_CASE("lovasz softmax matches the oracle and is order invariant") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix p = random_probs(gen, 9, 3);
    const auto t = random_targets(gen, 9, 3);
    const double v = lovasz_softmax(p, t).value;
    CHECK(v == doctest::Approx(oracle::lovasz_softmax_value(p, t)).epsilon(1e-12));

    std::vector<int> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Matrix pp(9, 3);
    std::vector<int> tp(9);
    for (int i = 0; i < 9; ++i) {
      pp.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
      tp[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    CHECK(lovasz_softmax(pp, tp).value == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("lovasz gradient away from sort ties") {
  std::mt19937_64 gen(18);
  int checked = 0;
  while (checked < 10) {
    const Matrix p = random_probs(gen, 8, 3);
    const auto t = random_targets(gen, 8, 3);
    if (oracle::sort_margin(p, t) < 1e-3) continue;
    ++checked;
    const LossResult r = lovasz_softmax(p, t);
    const double err =
        grad_error(p, r.grad, [&](const Matrix& x) { return lovasz_softmax(x, t).value; });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("boundary loss reference values") {
  // Identical one-hot prediction and target.
  const int h = 4, w = 4;
  std::vector<int> t(16, 0);
  for (int y = 1; y < 3; ++y) {
    for (int x = 1; x < 3; ++x) t[static_cast<std::size_t>(y * w + x)] = 1;
  }
  Matrix exact(16, 2);
  for (int i = 0; i < 16; ++i) {
    exact(i, 0) = t[static_cast<std::size_t>(i)] == 0;
    exact(i, 1) = t[static_cast<std::size_t>(i)] == 1;
  }
  CHECK(boundary_loss(exact, t, h, w, 3).value == 0.0);

  // Whole image of one class: no boundary on either side.
  Matrix ones(16, 2);
  ones.col(0).setOnes();
  ones.col(1).setZero();
  std::vector<int> zeros(16, 0);
  CHECK(boundary_loss(ones, zeros, h, w, 3).value == 0.0);

  // Prediction shifted one pixel to the right.
  Matrix shifted(16, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool fg = y >= 1 && y < 3 && x >= 2 && x < 4;
      shifted(y * w + x, 0) = !fg;
      shifted(y * w + x, 1) = fg;
    }
  }
  // A one-pixel shift stays inside the theta = 3 tolerance band.
  const double expected = oracle::boundary_value(shifted, t, h, w, 3);
  CHECK(expected == 0.0);
  CHECK(boundary_loss(shifted, t, h, w, 3).value == doctest::Approx(expected).epsilon(1e-12));

  // A two-pixel shift on a wider image does not.
  const int w2 = 7;
  std::vector<int> t2(static_cast<std::size_t>(h * w2), 0);
  Matrix far(h * w2, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w2; ++x) {
      const bool gt = y >= 1 && y < 3 && x >= 1 && x < 3;
      const bool pr = y >= 1 && y < 3 && x >= 3 && x < 5;
      t2[static_cast<std::size_t>(y * w2 + x)] = gt;
      far(y * w2 + x, 0) = !pr;
      far(y * w2 + x, 1) = pr;
    }
  }
  const double expected_far = oracle::boundary_value(far, t2, h, w2, 3);
  CHECK(expected_far > 0.0);
  CHECK(boundary_loss(far, t2, h, w2, 3).value == doctest::Approx(expected_far).epsilon(1e-12));
}

TEST_CASE("boundary loss rejects bad kernel sizes") {
  Matrix p = Matrix::Constant(4, 2, 0.5);
  std::vector<int> t = {0, 1, 0, 1};
  for (int theta : {0, 1, 2, 4}) {
    CHECK_THROWS_AS(boundary_loss(p, t, 2, 2, theta), Error);
  }
}

TEST_CASE("boundary loss matches the pooling oracle on soft inputs") {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 3 + trial % 4, w = 8 - trial % 3;
    const Matrix p = random_probs(gen, h * w, 3);
    const auto t = random_targets(gen, h * w, 3);
    for (int theta : {3, 5}) {
      CHECK(boundary_loss(p, t, h, w, theta).value ==
            doctest::Approx(oracle::boundary_value(p, t, h, w, theta)).epsilon(1e-12));
    }
  }
}

TEST_CASE("boundary loss gradient away from pooling ties") {
  std::mt19937_64 gen(20);
  int checked = 0;
  while (checked < 10) {
    const int h = 5, w = 6;
    const Matrix p = random_probs(gen, h * w, 3);
    const auto t = random_targets(gen, h * w, 3);
    if (oracle::boundary_margin(p, h, w, 3) < 1e-3) continue;
    ++checked;
    const LossResult r = boundary_loss(p, t, h, w, 3);
    const double err = grad_error(p, r.grad, [&](const Matrix& x) {
      return boundary_loss(x, t, h, w, 3).value;
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("losses are non-negative") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix p = random_probs(gen, 20, 4);
    const auto t = random_targets(gen, 20, 4);
    CHECK(weighted_focal_loss(p, t, 2.0, {}).value >= 0.0);
    CHECK(lovasz_softmax(p, t).value >= 0.0);
    CHECK(boundary_loss(p, t, 4, 5, 3).value >= 0.0);
    CHECK(classification_loss(oracle::random_matrix(gen, 3, 5, -2, 2), std::vector<int>{0, 4, 2}, 0.1)
              .value >= 0.0);
  }
}

TEST_CASE("total loss") {
  LossWeights w;
  const LossComponents c{1.0, 2.0, 3.0, 4.0};
  CHECK(total_loss(c, {}, w) == 10.0);

  LossWeights only_cls = w;
  only_cls.focal = only_cls.lovasz = only_cls.boundary = 0.0;
  CHECK(total_loss(c, {}, only_cls) == 1.0);

  LossWeights doubled = w;
  doubled.focal = 2.0;
  CHECK(total_loss(c, {}, doubled) - total_loss(c, {}, w) == 2.0);

  std::vector<LossComponents> aux = {c, {0.5, 0.5, 0.5, 0.5}};
  CHECK(total_loss(c, aux, w) == 10.0 + 10.0 + 2.0);

  LossComponents bad = c;
  bad.lovasz = std::nan("");
  try {
    total_loss(bad, {}, w);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
    CHECK(std::string(e.what()).find("lovasz") != std::string::npos);
  }
}

TEST_CASE("loss weights validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.gamma = -1.0;
  CHECK_THROWS_AS(w.validate(), Error);
  w = LossWeights{};
  w.focal = -0.5;
  CHECK_THROWS_AS(w.validate(), Error);
  CHECK_THROWS_AS(parse_balance_strategy("X"), Error);
  CHECK(parse_balance_strategy("U") == BalanceStrategy::kUnified);
}
