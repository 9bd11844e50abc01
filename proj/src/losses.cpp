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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/loss_kernels.hpp"

namespace rangeseg {
namespace {

void check_targets(const Matrix& probs, std::span<const int> targets, int ignore_index) {
  if (static_cast<Eigen::Index>(targets.size()) != probs.rows()) {
    fail(ErrorKind::kShape, "targets and probabilities disagree on pixel count");
  }
  for (int t : targets) {
    if (t != ignore_index && (t < 0 || t >= probs.cols())) {
      fail(ErrorKind::kShape, "target class " + std::to_string(t) + " out of range");
    }
  }
}

struct Pooled {
  std::vector<double> value;
  std::vector<int> argmax;
};

// theta×theta max pool, stride 1, windows clipped at the border (same as
// padding with -inf). Ties resolve to the first index in scan order.
Pooled max_pool(const std::vector<double>& in, int h, int w, int theta) {
  const int r = theta / 2;
  Pooled out{std::vector<double>(in.size()), std::vector<int>(in.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = -1;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          const int k = yy * w + xx;
          if (best < 0 || in[static_cast<std::size_t>(k)] > in[static_cast<std::size_t>(best)]) {
            best = k;
          }
        }
      }
      const auto i = static_cast<std::size_t>(y * w + x);
      out.value[i] = in[static_cast<std::size_t>(best)];
      out.argmax[i] = best;
    }
  }
  return out;
}

}  // namespace

BalanceStrategy parse_balance_strategy(const std::string& name) {
  if (name == "N" || name == "none") return BalanceStrategy::kNone;
  if (name == "C" || name == "class") return BalanceStrategy::kClass;
  if (name == "U" || name == "unified") return BalanceStrategy::kUnified;
  fail(ErrorKind::kConfig, "unknown balance strategy '" + name + "' (expected N, C or U)");
}

void LossWeights::validate() const {
  if (cls < 0 || focal < 0 || lovasz < 0 || boundary < 0) {
    fail(ErrorKind::kConfig, "loss weights must be non-negative");
  }
  if (gamma < 0) fail(ErrorKind::kConfig, "focal gamma must be non-negative");
  if (boundary_theta < 3 || boundary_theta % 2 == 0) {
    fail(ErrorKind::kConfig, "boundary kernel must be odd and at least 3");
  }
}

std::vector<double> focal_class_weights(const ClassStats& stats, BalanceStrategy strategy) {
  std::vector<double> w(static_cast<std::size_t>(stats.num_classes), 1.0);
  for (int i = 1; i <= stats.num_classes; ++i) {
    const auto k = static_cast<std::size_t>(i);
    switch (strategy) {
      case BalanceStrategy::kNone: break;
      case BalanceStrategy::kClass: w[k - 1] = stats.alpha[k]; break;
      case BalanceStrategy::kUnified: w[k - 1] = stats.alpha[k] * stats.beta[k]; break;
    }
  }
  return w;
}

LossResult weighted_focal_loss(const Matrix& probs, std::span<const int> targets, double gamma,
                               std::span<const double> class_weights, int ignore_index) {
  check_targets(probs, targets, ignore_index);
  if (!class_weights.empty() && static_cast<Eigen::Index>(class_weights.size()) != probs.cols()) {
    fail(ErrorKind::kShape, "one focal weight per class required");
  }
  LossResult res;
  res.grad = Matrix::Zero(probs.rows(), probs.cols());
  std::size_t count = 0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t == ignore_index) continue;
    ++count;
    const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(t)];
    double p = probs(i, t);
    const bool clamped = p < kProbFloor;
    if (clamped) {
      p = kProbFloor;
      ++res.clamped;
    }
    const double q = 1.0 - p;
    const double log_p = std::log(p);
    const double mod = std::pow(q, gamma);
    sum += -w * mod * log_p;
    if (!clamped) {
      // d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p
      // The first term vanishes at p = 1 (log p ~ -q) even when gamma < 1.
      const double first = (gamma == 0.0 || q == 0.0) ? 0.0 : gamma * std::pow(q, gamma - 1.0) * log_p;
      res.grad(i, t) = w * (first - mod / p);
    }
  }
  if (count == 0) return res;
  res.value = sum / static_cast<double>(count);
  res.grad /= static_cast<double>(count);
  return res;
}

LossResult cross_entropy(const Matrix& probs, std::span<const int> targets, int ignore_index) {
  return weighted_focal_loss(probs, targets, 0.0, {}, ignore_index);
}

LossResult classification_loss(const Matrix& logits, std::span<const int> targets,
                               double no_object_weight) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    fail(ErrorKind::kShape, "one class target per query required");
  }
  const int no_object = static_cast<int>(logits.cols()) - 1;
  LossResult res;
  res.grad = Matrix::Zero(logits.rows(), logits.cols());
  double weight_sum = 0.0;
  double sum = 0.0;
  for (Eigen::Index q = 0; q < logits.rows(); ++q) {
    const int t = targets[static_cast<std::size_t>(q)];
    if (t < 0 || t > no_object) fail(ErrorKind::kShape, "query target out of range");
    const double w = t == no_object ? no_object_weight : 1.0;
    const double m = logits.row(q).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(q).array() - m).exp();
    const double z = e.sum();
    sum += w * (std::log(z) + m - logits(q, t));
    res.grad.row(q) = w * e / z;
    res.grad(q, t) -= w;
    weight_sum += w;
  }
  if (weight_sum <= 0.0) {
    res.grad.setZero();
    return res;
  }
  res.value = sum / weight_sum;
  res.grad /= weight_sum;
  return res;
}

std::vector<int> class_targets_from_matches(int num_queries, int num_classes,
                                            std::span<const std::pair<int, int>> matches,
                                            std::span<const int> target_classes) {
  std::vector<int> out(static_cast<std::size_t>(num_queries), num_classes);
  for (const auto& [q, t] : matches) {
    out.at(static_cast<std::size_t>(q)) = target_classes[static_cast<std::size_t>(t)];
  }
  return out;
}

std::vector<double> lovasz_grad(std::span<const std::uint8_t> fg_sorted) {
  const std::size_t n = fg_sorted.size();
  std::vector<double> g(n);
  double gts = 0.0;
  for (auto f : fg_sorted) gts += f;
  double cum_fg = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum_fg += fg_sorted[k];
    const double intersection = gts - cum_fg;
    const double uni = gts + static_cast<double>(k + 1) - cum_fg;
    const double jaccard = 1.0 - intersection / uni;
    g[k] = jaccard - prev;
    prev = jaccard;
  }
  return g;
}

double lovasz_binary(std::span<const double> errors, std::span<const std::uint8_t> fg,
                     std::vector<double>* grad_errors) {
  const std::size_t n = errors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
  std::vector<std::uint8_t> fg_sorted(n);
  for (std::size_t k = 0; k < n; ++k) fg_sorted[k] = fg[order[k]];
  const auto g = lovasz_grad(fg_sorted);
  double loss = 0.0;
  if (grad_errors != nullptr) grad_errors->assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    loss += errors[order[k]] * g[k];
    if (grad_errors != nullptr) (*grad_errors)[order[k]] = g[k];
  }
  return loss;
}

LossResult lovasz_softmax(const Matrix& probs, std::span<const int> targets, int ignore_index) {
  check_targets(probs, targets, ignore_index);
  LossResult res;
  res.grad = Matrix::Zero(probs.rows(), probs.cols());

  std::vector<Eigen::Index> pixels;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (targets[static_cast<std::size_t>(i)] != ignore_index) pixels.push_back(i);
  }
  int present = 0;
  std::vector<double> errors(pixels.size());
  std::vector<std::uint8_t> fg(pixels.size());
  std::vector<double> grad_e;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    bool any = false;
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      fg[k] = targets[static_cast<std::size_t>(pixels[k])] == c ? 1 : 0;
      errors[k] = std::abs(fg[k] - probs(pixels[k], c));
      any = any || fg[k];
    }
    if (!any) continue;
    ++present;
    res.value += lovasz_binary(errors, fg, &grad_e);
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      // error = fg - p for foreground, p for background
      res.grad(pixels[k], c) += fg[k] ? -grad_e[k] : grad_e[k];
    }
  }
  if (present > 0) {
    res.value /= present;
    res.grad /= present;
  }
  return res;
}

LossResult boundary_loss(const Matrix& probs, std::span<const int> targets, int height,
                         int width, int theta, int ignore_index) {
  check_targets(probs, targets, ignore_index);
  if (static_cast<Eigen::Index>(height) * width != probs.rows()) {
    fail(ErrorKind::kShape, "height * width must equal the pixel count");
  }
  if (theta < 3 || theta % 2 == 0) fail(ErrorKind::kConfig, "boundary kernel must be odd and >= 3");

  const auto n = static_cast<std::size_t>(probs.rows());
  LossResult res;
  res.grad = Matrix::Zero(probs.rows(), probs.cols());
  std::vector<double> valid(n);
  for (std::size_t i = 0; i < n; ++i) valid[i] = targets[i] == ignore_index ? 0.0 : 1.0;

  int present = 0;
  std::vector<double> inv_gt(n), inv_pred(n), gt_b(n), pred_b(n);
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool fg = targets[i] == c;
      any = any || fg;
      inv_gt[i] = fg ? 0.0 : 1.0;
      inv_pred[i] = 1.0 - probs(static_cast<Eigen::Index>(i), c);
    }
    if (!any) continue;
    ++present;

    const Pooled gt_pool = max_pool(inv_gt, height, width, theta);
    const Pooled pred_pool = max_pool(inv_pred, height, width, theta);
    for (std::size_t i = 0; i < n; ++i) {
      gt_b[i] = gt_pool.value[i] - inv_gt[i];
      pred_b[i] = pred_pool.value[i] - inv_pred[i];
    }
    const Pooled gt_ext = max_pool(gt_b, height, width, theta);
    const Pooled pred_ext = max_pool(pred_b, height, width, theta);

    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s1 += valid[i] * pred_b[i] * gt_ext.value[i];
      s2 += valid[i] * pred_b[i];
      s3 += valid[i] * pred_ext.value[i] * gt_b[i];
      s4 += valid[i] * gt_b[i];
    }
    if (s2 == 0.0 && s4 == 0.0) continue;  // no boundary anywhere: BF1 = 1
    const double precision = s2 > 0.0 ? s1 / s2 : 0.0;
    const double recall = s4 > 0.0 ? s3 / s4 : 0.0;
    const double pr = precision + recall;
    const double bf1 = pr > 0.0 ? 2.0 * precision * recall / pr : 0.0;
    res.value += 1.0 - bf1;
    if (pr <= 0.0) continue;

    const double dl_dp = -2.0 * recall * recall / (pr * pr);
    const double dl_dr = -2.0 * precision * precision / (pr * pr);
    std::vector<double> g_pred_b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (s2 > 0.0) g_pred_b[i] += dl_dp * valid[i] * (gt_ext.value[i] - precision) / s2;
      if (s4 > 0.0) {
        const double g_ext = dl_dr * valid[i] * gt_b[i] / s4;
        g_pred_b[static_cast<std::size_t>(pred_ext.argmax[i])] += g_ext;
      }
    }
    // pred_b = maxpool(a) - a with a = 1 - p, so dp = -da.
    std::vector<double> g_inv(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      g_inv[static_cast<std::size_t>(pred_pool.argmax[i])] += g_pred_b[i];
      g_inv[i] -= g_pred_b[i];
    }
    for (std::size_t i = 0; i < n; ++i) res.grad(static_cast<Eigen::Index>(i), c) -= g_inv[i];
  }
  if (present > 0) {
    res.value /= present;
    res.grad /= present;
  }
  return res;
}

double total_loss(const LossComponents& main, std::span<const LossComponents> aux,
                  const LossWeights& weights) {
  auto weighted = [&](const LossComponents& c, const std::string& where) {
    const std::pair<const char*, double> parts[] = {
        {"classification", c.cls}, {"focal", c.focal}, {"lovasz", c.lovasz},
        {"boundary", c.boundary}};
    for (const auto& [name, value] : parts) {
      if (!std::isfinite(value)) {
        fail(ErrorKind::kNumeric, std::string("non-finite ") + name + " loss" + where);
      }
    }
    return weights.cls * c.cls + weights.focal * c.focal + weights.lovasz * c.lovasz +
           weights.boundary * c.boundary;
  };
  double total = weighted(main, "");
  for (std::size_t k = 0; k < aux.size(); ++k) {
    total += weighted(aux[k], " in auxiliary term " + std::to_string(k));
  }
  return total;
}

}  // namespace rangeseg
