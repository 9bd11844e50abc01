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

#include "rangeseg/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rangeseg/error.hpp"
#include "rangeseg/mask_head.hpp"

namespace rangeseg {

void KnnParams::validate() const {
  if (k < 1) fail(ErrorKind::kConfig, "knn k must be at least 1");
  if (window < 1 || window % 2 == 0) fail(ErrorKind::kConfig, "knn window must be odd");
  if (!(cutoff > 0.0)) fail(ErrorKind::kConfig, "knn cutoff must be positive");
  if (!(sigma > 0.0)) fail(ErrorKind::kConfig, "knn sigma must be positive");
}

std::vector<int> knn_clean(const LabelImage& range_labels, const RangeImage& img,
                           const KnnParams& params) {
  params.validate();
  std::vector<int> out = unproject_labels(range_labels, img);
  const int h = img.geometry.height;
  const int w = img.geometry.width;
  const int r = params.window / 2;

  struct Candidate {
    double dr;
    std::size_t pixel;
  };
  std::vector<Candidate> cands;
  std::map<int, double> votes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const PixelCoord& px = img.point_to_pixel[i];
    cands.clear();
    for (int v = std::max(0, px.v - r); v <= std::min(h - 1, px.v + r); ++v) {
      for (int u = std::max(0, px.u - r); u <= std::min(w - 1, px.u + r); ++u) {
        if (!img.valid(v, u)) continue;
        const double dr = std::abs(static_cast<double>(img.range(v, u)) - px.r);
        if (dr <= params.cutoff) cands.push_back({dr, range_labels.index(v, u)});
      }
    }
    if (cands.empty()) continue;
    const std::size_t keep = std::min(cands.size(), static_cast<std::size_t>(params.k));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), [](const Candidate& a, const Candidate& b) {
                        return a.dr < b.dr || (a.dr == b.dr && a.pixel < b.pixel);
                      });
    votes.clear();
    for (std::size_t j = 0; j < keep; ++j) {
      const double weight = std::exp(-cands[j].dr * cands[j].dr / (2.0 * params.sigma * params.sigma));
      votes[range_labels.data[cands[j].pixel]] += weight;
    }
    // Ascending class order: strict > keeps the lowest id on ties.
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out[i] = best->first;
  }
  return out;
}

TemporalWindow::TemporalWindow(int past, int future, TemporalSpace space)
    : past_(past), future_(future), space_(space) {
  if (past < 0 || future < 0) fail(ErrorKind::kConfig, "temporal window sizes must be >= 0");
}

void TemporalWindow::push(Matrix class_logits) {
  if (!buffer_.empty() && (buffer_.front().rows() != class_logits.rows() ||
                           buffer_.front().cols() != class_logits.cols())) {
    fail(ErrorKind::kShape, "temporal window frames must share one shape");
  }
  buffer_.push_back(std::move(class_logits));
  while (buffer_.size() > capacity()) buffer_.pop_front();
}

Matrix temporal_filter(const TemporalWindow& window) {
  const auto& buf = window.buffer();
  if (buf.empty()) fail(ErrorKind::kState, "temporal filter called on an empty window");
  const double n = static_cast<double>(buf.size());
  if (window.space() == TemporalSpace::kLogits) {
    Matrix sum = Matrix::Zero(buf.front().rows(), buf.front().cols());
    for (const Matrix& m : buf) sum += m;
    return sum / n;
  }
  Matrix sum = Matrix::Zero(buf.front().rows(), buf.front().cols());
  for (const Matrix& m : buf) sum += softmax_rows(m);
  return (sum / n).array().log().matrix();
}

std::vector<Matrix> temporal_filter_sequence(const std::vector<Matrix>& logits, int past,
                                             int future, TemporalSpace space) {
  std::vector<Matrix> out;
  out.reserve(logits.size());
  const auto n = static_cast<int>(logits.size());
  for (int t = 0; t < n; ++t) {
    TemporalWindow window(past, future, space);
    for (int s = std::max(0, t - past); s <= std::min(n - 1, t + future); ++s) {
      window.push(logits[static_cast<std::size_t>(s)]);
    }
    out.push_back(temporal_filter(window));
  }
  return out;
}

}  // namespace rangeseg
