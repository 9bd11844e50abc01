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
#include <map>

#include "rangeseg/error.hpp"
#include "rangeseg/mask_head.hpp"

namespace rangeseg {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - m);
      z += out(i, j);
    }
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out(i, j) /= z;
  }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<int> semantic_inference(const Matrix& class_logits, const Matrix& mask_logits) {
  if (class_logits.rows() != mask_logits.rows()) {
    fail(ErrorKind::kShape, "class and mask predictions disagree on query count");
  }
  if (class_logits.cols() < 2) fail(ErrorKind::kShape, "need at least one real class");
  const Matrix probs = softmax_rows(class_logits);
  const auto num_classes = class_logits.cols() - 1;
  const auto pixels = mask_logits.cols();
  std::vector<int> out(static_cast<std::size_t>(pixels), 0);
  std::vector<double> score(static_cast<std::size_t>(num_classes));
  for (Eigen::Index p = 0; p < pixels; ++p) {
    std::fill(score.begin(), score.end(), 0.0);
    for (Eigen::Index q = 0; q < probs.rows(); ++q) {
      const double m = sigmoid(mask_logits(q, p));
      for (Eigen::Index c = 0; c < num_classes; ++c) {
        score[static_cast<std::size_t>(c)] += probs(q, c) * m;
      }
    }
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (score[static_cast<std::size_t>(c)] > score[static_cast<std::size_t>(best)]) best = c;
    }
    out[static_cast<std::size_t>(p)] = best;
  }
  return out;
}

std::vector<bool> thing_flags_by_index(const ClassConfig& cfg) {
  std::vector<bool> out(static_cast<std::size_t>(cfg.num_classes));
  for (int i = 0; i < cfg.num_classes; ++i) {
    out[static_cast<std::size_t>(i)] =
        cfg.is_thing[static_cast<std::size_t>(ClassConfig::train_id_of_index(i))];
  }
  return out;
}

PanopticMap panoptic_inference(const Matrix& class_logits, const Matrix& mask_logits,
                               const std::vector<bool>& is_thing,
                               const PanopticThresholds& thresholds) {
  if (class_logits.rows() != mask_logits.rows()) {
    fail(ErrorKind::kShape, "class and mask predictions disagree on query count");
  }
  const int num_classes = static_cast<int>(class_logits.cols()) - 1;
  if (static_cast<int>(is_thing.size()) != num_classes) {
    fail(ErrorKind::kShape, "thing flags must cover every real class");
  }
  const Matrix probs = softmax_rows(class_logits);
  const auto num_queries = static_cast<int>(probs.rows());
  const auto pixels = static_cast<std::size_t>(mask_logits.cols());

  std::vector<int> label(static_cast<std::size_t>(num_queries));
  std::vector<double> score(static_cast<std::size_t>(num_queries));
  std::vector<std::size_t> original_area(static_cast<std::size_t>(num_queries), 0);
  std::vector<int> active;
  for (int q = 0; q < num_queries; ++q) {
    int best = 0;
    for (int c = 1; c <= num_classes; ++c) {
      if (probs(q, c) > probs(q, best)) best = c;
    }
    label[static_cast<std::size_t>(q)] = best;
    score[static_cast<std::size_t>(q)] = probs(q, best);
    for (std::size_t p = 0; p < pixels; ++p) {
      if (sigmoid(mask_logits(q, static_cast<Eigen::Index>(p))) >= 0.5) {
        ++original_area[static_cast<std::size_t>(q)];
      }
    }
    if (best != num_classes && probs(q, best) >= thresholds.object) active.push_back(q);
  }

  // Assign pixels to the best surviving query; drop queries that keep too
  // little of their own mask and repeat until stable.
  std::vector<int> owner(pixels, -1);
  while (true) {
    std::vector<std::size_t> area(static_cast<std::size_t>(num_queries), 0);
    for (std::size_t p = 0; p < pixels; ++p) {
      int best = -1;
      double best_val = 0.0;
      for (int q : active) {
        const double v = score[static_cast<std::size_t>(q)] *
                         sigmoid(mask_logits(q, static_cast<Eigen::Index>(p)));
        if (best < 0 || v > best_val) {
          best = q;
          best_val = v;
        }
      }
      owner[p] = best;
      if (best >= 0) ++area[static_cast<std::size_t>(best)];
    }
    std::vector<int> survivors;
    for (int q : active) {
      const auto a = static_cast<double>(area[static_cast<std::size_t>(q)]);
      const auto orig = static_cast<double>(original_area[static_cast<std::size_t>(q)]);
      if (a > 0 && orig > 0 && a / orig >= thresholds.overlap) survivors.push_back(q);
    }
    if (survivors.size() == active.size()) break;
    active = std::move(survivors);
  }

  PanopticMap out;
  out.class_index.assign(pixels, -1);
  out.segment_id.assign(pixels, 0);
  std::vector<int> segment_of_query(static_cast<std::size_t>(num_queries), 0);
  std::map<int, int> stuff_segment;  // class -> segment id
  for (int q : active) {
    const int c = label[static_cast<std::size_t>(q)];
    const bool thing = is_thing[static_cast<std::size_t>(c)];
    if (!thing) {
      auto it = stuff_segment.find(c);
      if (it != stuff_segment.end()) {
        segment_of_query[static_cast<std::size_t>(q)] = it->second;
        continue;
      }
    }
    const int id = static_cast<int>(out.segments.size()) + 1;
    out.segments.push_back({id, c, thing, q, 0});
    segment_of_query[static_cast<std::size_t>(q)] = id;
    if (!thing) stuff_segment[c] = id;
  }
  for (std::size_t p = 0; p < pixels; ++p) {
    if (owner[p] < 0) continue;
    const int id = segment_of_query[static_cast<std::size_t>(owner[p])];
    Segment& seg = out.segments[static_cast<std::size_t>(id - 1)];
    out.segment_id[p] = id;
    out.class_index[p] = seg.class_index;
    ++seg.area;
  }
  return out;
}

}  // namespace rangeseg
