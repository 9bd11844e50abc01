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
#include <limits>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/loss_kernels.hpp"

namespace rangeseg {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Matrix matching_cost(const Matrix& class_probs, const Matrix& mask_logits,
                     std::span<const MaskTarget> targets, const MatchingWeights& weights) {
  const auto num_queries = class_probs.rows();
  const auto num_targets = static_cast<Eigen::Index>(targets.size());
  if (num_targets > num_queries) {
    fail(ErrorKind::kShape, std::to_string(num_targets) + " targets cannot be matched to " +
                                std::to_string(num_queries) + " queries");
  }
  if (mask_logits.rows() != num_queries) {
    fail(ErrorKind::kShape, "class and mask predictions disagree on query count");
  }
  const auto pixels = static_cast<std::size_t>(mask_logits.cols());
  for (const MaskTarget& t : targets) {
    if (t.mask.size() != pixels) fail(ErrorKind::kShape, "target mask size mismatch");
    if (t.class_index < 0 || t.class_index >= class_probs.cols() - 1) {
      fail(ErrorKind::kShape, "target class out of range");
    }
  }

  Matrix cost(num_queries, num_targets);
  std::vector<double> prob(pixels), errors(pixels);
  for (Eigen::Index q = 0; q < num_queries; ++q) {
    for (std::size_t i = 0; i < pixels; ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-mask_logits(q, static_cast<Eigen::Index>(i))));
    }
    for (Eigen::Index t = 0; t < num_targets; ++t) {
      const MaskTarget& target = targets[static_cast<std::size_t>(t)];
      double focal = 0.0;
      for (std::size_t i = 0; i < pixels; ++i) {
        const double x = mask_logits(q, static_cast<Eigen::Index>(i));
        const double s = prob[i];
        if (target.mask[i]) {
          focal += std::pow(1.0 - s, weights.gamma) * softplus(-x);
          errors[i] = 1.0 - s;
        } else {
          focal += std::pow(s, weights.gamma) * softplus(x);
          errors[i] = s;
        }
      }
      focal /= static_cast<double>(pixels);
      const double lovasz = lovasz_binary(errors, target.mask);
      cost(q, t) = -weights.cls * class_probs(q, target.class_index) + weights.focal * focal +
                   weights.lovasz * lovasz;
    }
  }
  return cost;
}

std::vector<std::pair<int, int>> hungarian_match(const Matrix& cost) {
  // Shortest augmenting paths with potentials, targets as rows of the
  // working problem. O(T^2 Q).
  const int n = static_cast<int>(cost.cols());  // targets
  const int m = static_cast<int>(cost.rows());  // queries
  if (n == 0) return {};
  if (n > m) fail(ErrorKind::kShape, "more targets than queries");
  if (!cost.allFinite()) fail(ErrorKind::kNumeric, "matching cost is not finite");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> owner(static_cast<std::size_t>(m) + 1, 0);  // query column -> target row
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int row = 1; row <= n; ++row) {
    owner[0] = row;
    int col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(col0)] = true;
      const int row0 = owner[static_cast<std::size_t>(col0)];
      double delta = kInf;
      int col1 = 0;
      for (int col = 1; col <= m; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) continue;
        const double cur = cost(col - 1, row0 - 1) - u[static_cast<std::size_t>(row0)] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = col;
        }
      }
      for (int col = 0; col <= m; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) {
          u[static_cast<std::size_t>(owner[c])] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[static_cast<std::size_t>(col0)] != 0);
    do {
      const int col1 = way[static_cast<std::size_t>(col0)];
      owner[static_cast<std::size_t>(col0)] = owner[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<std::pair<int, int>> pairs(static_cast<std::size_t>(n));
  for (int col = 1; col <= m; ++col) {
    const int row = owner[static_cast<std::size_t>(col)];
    if (row > 0) pairs[static_cast<std::size_t>(row - 1)] = {col - 1, row - 1};
  }
  return pairs;
}

}  // namespace rangeseg
