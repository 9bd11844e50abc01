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

#include <random>
#include <set>

#include "doctest.h"
#include "rangeseg/error.hpp"
#include "rangeseg/loss_kernels.hpp"
#include "support/oracles.hpp"

using namespace rangeseg;

namespace {

double total_cost(const Matrix& cost, const std::vector<std::pair<int, int>>& pairs) {
  double s = 0.0;
  for (auto [q, t] : pairs) s += cost(q, t);
  return s;
}

void check_injective(const std::vector<std::pair<int, int>>& pairs, int targets) {
  REQUIRE(static_cast<int>(pairs.size()) == targets);
  std::set<int> queries;
  for (int t = 0; t < targets; ++t) {
    CHECK(pairs[static_cast<std::size_t>(t)].second == t);
    queries.insert(pairs[static_cast<std::size_t>(t)].first);
  }
  CHECK(static_cast<int>(queries.size()) == targets);
}

MaskTarget square_target(int cls, int h, int w, int y0, int x0, int size) {
  MaskTarget t;
  t.class_index = cls;
  t.mask.assign(static_cast<std::size_t>(h * w), 0);
  for (int y = y0; y < y0 + size; ++y) {
    for (int x = x0; x < x0 + size; ++x) t.mask[static_cast<std::size_t>(y * w + x)] = 1;
  }
  return t;
}

}  // namespace

TEST_CASE("hungarian reference cases") {
  Matrix c(2, 2);
  c << 1, 2, 2, 1;
  const auto m = hungarian_match(c);
  CHECK(m == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(total_cost(c, m) == 2.0);

  CHECK(hungarian_match(Matrix(3, 0)).empty());
  CHECK_THROWS_AS(hungarian_match(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("hungarian matches exhaustive enumeration on square matrices") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix c = oracle::random_matrix(gen, 7, 7, -5.0, 5.0);
    const auto m = hungarian_match(c);
    check_injective(m, 7);
    CHECK(total_cost(c, m) == doctest::Approx(oracle::brute_force_assignment(c)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian matches exhaustive enumeration on rectangular matrices") {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 2 + trial % 6;
    const int t = 1 + trial % q;
    const Matrix c = oracle::random_matrix(gen, q, t, 0.0, 3.0);
    const auto m = hungarian_match(c);
    check_injective(m, t);
    CHECK(total_cost(c, m) == doctest::Approx(oracle::brute_force_assignment(c)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian total is invariant under row and column permutation") {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix c = oracle::random_matrix(gen, 6, 4, -1.0, 1.0);
    std::vector<int> rp(6), cp(4);
    std::iota(rp.begin(), rp.end(), 0);
    std::iota(cp.begin(), cp.end(), 0);
    std::shuffle(rp.begin(), rp.end(), gen);
    std::shuffle(cp.begin(), cp.end(), gen);
    Matrix p(6, 4);
    for (int r = 0; r < 6; ++r) {
      for (int k = 0; k < 4; ++k) p(r, k) = c(rp[static_cast<std::size_t>(r)], cp[static_cast<std::size_t>(k)]);
    }
    CHECK(total_cost(p, hungarian_match(p)) ==
          doctest::Approx(total_cost(c, hungarian_match(c))).epsilon(1e-12));
  }
}

TEST_CASE("matching cost") {
  const int h = 4, w = 4, k = 3;
  std::vector<MaskTarget> targets = {square_target(1, h, w, 0, 0, 2),
                                     square_target(2, h, w, 2, 2, 2)};

  // Query 0 is exactly right for target 0; queries 1 and 2 are identical.
  Matrix probs(3, k + 1);
  probs << 0, 1, 0, 0, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25;
  Matrix logits(3, h * w);
  for (int i = 0; i < h * w; ++i) {
    logits(0, i) = targets[0].mask[static_cast<std::size_t>(i)] ? 30.0 : -30.0;
    logits(1, i) = 0.3 * i - 2.0;
    logits(2, i) = 0.3 * i - 2.0;
  }
  const Matrix c = matching_cost(probs, logits, targets, MatchingWeights{});
  REQUIRE(c.rows() == 3);
  REQUIRE(c.cols() == 2);
  CHECK(c(0, 0) < c(1, 0));
  CHECK(c(0, 0) < c(2, 0));
  CHECK(c(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(c.row(1) == c.row(2));
  CHECK(c.allFinite());

  const auto m = hungarian_match(c);
  CHECK(m[0].first == 0);

  CHECK_THROWS_AS(matching_cost(probs.topRows(1), logits.topRows(1), targets, MatchingWeights{}),
                  Error);
}

TEST_CASE("matching on a random 3x2 instance is optimal") {
  std::mt19937_64 gen(34);
  const int h = 3, w = 3;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MaskTarget> targets = {square_target(0, h, w, 0, 0, 2),
                                       square_target(2, h, w, 1, 1, 2)};
    const Matrix probs = oracle::softmax(oracle::random_matrix(gen, 3, 4, -2, 2));
    const Matrix logits = oracle::random_matrix(gen, 3, h * w, -3, 3);
    const Matrix c = matching_cost(probs, logits, targets, MatchingWeights{});
    CHECK(total_cost(c, hungarian_match(c)) ==
          doctest::Approx(oracle::brute_force_assignment(c)).epsilon(1e-12));
  }
}
