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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rangeseg/class_stats.hpp"

namespace rangeseg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Loss value plus the gradient with respect to the kernel's direct input.
struct LossResult {
  double value = 0.0;
  Matrix grad;
  std::size_t clamped = 0;  // target probabilities raised to kProbFloor
};

inline constexpr double kProbFloor = 1e-12;

enum class BalanceStrategy {
  kNone,     // alpha = beta = 1
  kClass,    // alpha only
  kUnified,  // alpha * beta
};

BalanceStrategy parse_balance_strategy(const std::string& name);

struct LossWeights {
  double cls = 1.0;
  double focal = 1.0;
  double lovasz = 1.0;
  double boundary = 1.0;
  double gamma = 2.0;
  BalanceStrategy strategy = BalanceStrategy::kUnified;
  double no_object_weight = 0.1;
  int boundary_theta = 3;

  void validate() const;
};

/// Per-class focal weights in class-index order (train id - 1).
std::vector<double> focal_class_weights(const ClassStats& stats, BalanceStrategy strategy);

// Pixel-level kernels take `probs` as pixels × classes with rows on the
// simplex; `targets` holds one class index per pixel, `ignore_index` marks
// excluded pixels.

/// Mean over pixels of -w_c (1 - p_t)^gamma log p_t. Empty `class_weights`
/// means unit weights.
LossResult weighted_focal_loss(const Matrix& probs, std::span<const int> targets, double gamma,
                               std::span<const double> class_weights, int ignore_index = -1);

/// Mean of -log p_t.
LossResult cross_entropy(const Matrix& probs, std::span<const int> targets,
                         int ignore_index = -1);

/// Softmax cross-entropy over queries. `targets[q]` is a class index, with
/// logits.cols() - 1 meaning no-object; those terms are weighted by
/// `no_object_weight` and the sum is normalized by the total weight.
/// Gradient is with respect to the logits.
LossResult classification_loss(const Matrix& logits, std::span<const int> targets,
                               double no_object_weight);

/// Query targets for classification_loss: matched queries take their
/// target's class, all others the no-object index `num_classes`.
std::vector<int> class_targets_from_matches(int num_queries, int num_classes,
                                            std::span<const std::pair<int, int>> matches,
                                            std::span<const int> target_classes);

/// Jaccard-loss gradient vector for foreground flags sorted by decreasing error.
std::vector<double> lovasz_grad(std::span<const std::uint8_t> fg_sorted);

/// Lovász extension of the Jaccard loss for one binary problem.
/// Returns the loss and d loss / d errors.
double lovasz_binary(std::span<const double> errors, std::span<const std::uint8_t> fg,
                     std::vector<double>* grad_errors = nullptr);

/// Multi-class Lovász-softmax averaged over classes present in `targets`.
LossResult lovasz_softmax(const Matrix& probs, std::span<const int> targets,
                          int ignore_index = -1);

/// 1 - boundary F1 per present class, averaged. Boundaries are
/// maxpool(1 - m, theta) - (1 - m); precision and recall tolerate a
/// theta-wide dilation. Empty prediction and target boundaries score BF1 = 1.
LossResult boundary_loss(const Matrix& probs, std::span<const int> targets, int height,
                         int width, int theta, int ignore_index = -1);

struct LossComponents {
  double cls = 0.0;
  double focal = 0.0;
  double lovasz = 0.0;
  double boundary = 0.0;
};

/// Weighted sum of the main components plus identically weighted auxiliary
/// (deep supervision) terms. Throws a numeric error naming any non-finite
/// component.
double total_loss(const LossComponents& main, std::span<const LossComponents> aux,
                  const LossWeights& weights);

struct MaskTarget {
  int class_index = 0;
  std::vector<std::uint8_t> mask;  // H*W, row-major
  bool is_thing = false;
};

struct MatchingWeights {
  double cls = 1.0;
  double focal = 1.0;
  double lovasz = 1.0;
  double gamma = 2.0;
};

/// Q×T cost: -p_q(class_t) + focal and Lovász costs of sigmoid(mask_q) vs mask_t.
Matrix matching_cost(const Matrix& class_probs, const Matrix& mask_logits,
                     std::span<const MaskTarget> targets, const MatchingWeights& weights);

/// Minimum-cost assignment of every target (column) to a distinct query
/// (row). Requires cols <= rows. Pairs are (query, target), sorted by target.
std::vector<std::pair<int, int>> hungarian_match(const Matrix& cost);

}  // namespace rangeseg
