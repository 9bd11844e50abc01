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

#include <deque>
#include <vector>

#include "rangeseg/grid.hpp"
#include "rangeseg/loss_kernels.hpp"
#include "rangeseg/range_projection.hpp"

namespace rangeseg {

struct KnnParams {
  int k = 5;
  int window = 5;
  double sigma = 1.0;   // meters
  double cutoff = 1.0;  // meters

  void validate() const;
};

/// Re-labels every point by a range-weighted vote over the valid pixels in a
/// window around its own pixel. Points with no candidate inside the cutoff
/// keep their unprojected label.
std::vector<int> knn_clean(const LabelImage& range_labels, const RangeImage& img,
                           const KnnParams& params);

enum class TemporalSpace {
  kLogits,         // average raw class logits
  kProbabilities,  // average softmax outputs, returned as log-probabilities
};

/// Sliding buffer of per-query class logits over K past and L future frames.
class TemporalWindow {
 public:
  TemporalWindow(int past, int future, TemporalSpace space = TemporalSpace::kLogits);

  int past() const { return past_; }
  int future() const { return future_; }
  std::size_t capacity() const { return static_cast<std::size_t>(past_ + future_ + 1); }
  std::size_t size() const { return buffer_.size(); }
  TemporalSpace space() const { return space_; }
  const std::deque<Matrix>& buffer() const { return buffer_; }

  /// Appends the newest frame, evicting the oldest once full. All frames
  /// must share one shape.
  void push(Matrix class_logits);
  void clear() { buffer_.clear(); }

 private:
  int past_;
  int future_;
  TemporalSpace space_;
  std::deque<Matrix> buffer_;
};

/// Mean of the buffered class logits (or probabilities, per the window's
/// space). Throws a state error on an empty buffer.
Matrix temporal_filter(const TemporalWindow& window);

/// Filters a whole sequence with windows [t-K, t+L] clipped to its ends.
std::vector<Matrix> temporal_filter_sequence(const std::vector<Matrix>& logits, int past,
                                             int future,
                                             TemporalSpace space = TemporalSpace::kLogits);

}  // namespace rangeseg
