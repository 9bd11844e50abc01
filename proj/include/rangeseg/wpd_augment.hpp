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

#include <cstdint>
#include <vector>

#include "rangeseg/class_stats.hpp"
#include "rangeseg/kitti_io.hpp"
#include "rangeseg/rng.hpp"

namespace rangeseg {

enum class DropGranularity {
  kClass,  // all points of a class go together
  kPoint,  // each point of a selected class is dropped independently
};

enum class WpdMode { kPasteDrop, kPasteOnly, kDropOnly };

struct AugmentParams {
  double p_flip = 0.5;
  double rot_range = 3.14159265358979323846;  // radians, yaw in [-rot, rot]
  double trans_range = 0.0;                   // meters per axis
  double p_point_drop = 0.0;
  double t = kDefaultLongTailThreshold;
  Task task = Task::kSemantic;
  std::uint64_t seed = 0;
  DropGranularity drop_granularity = DropGranularity::kClass;
  WpdMode mode = WpdMode::kPasteDrop;

  /// Throws a config error on probabilities outside [0,1] or negative ranges.
  void validate() const;
};

/// Decisions taken by one augmentation call, for auditing and statistics.
struct AugmentLog {
  struct PasteDraw {
    int class_id;
    std::uint32_t source_instance;  // instance id in the second frame
    double probability;
    bool pasted;
    std::size_t num_points;
  };
  struct DropDraw {
    int class_id;
    double probability;
    bool dropped;  // class granularity: the whole class went
    std::size_t num_points_removed;
  };
  std::vector<PasteDraw> pastes;
  std::vector<DropDraw> drops;
  std::size_t first_pasted_index = 0;  // points at or after this index were pasted
};

/// Flip, yaw rotation, translation and point dropping, in that order.
/// Draws are consumed in a fixed order regardless of which transforms are
/// active.
PointCloud common_augment(const PointCloud& cloud, const AugmentParams& params, Rng& rng);

/// Appends long-tail objects of `second` to `first` with probability w_i - t.
/// Thing classes are decided per instance, stuff classes per class; pasted
/// thing points get fresh instance ids.
PointCloud weighted_paste(const PointCloud& first, const PointCloud& second,
                          const ClassStats& stats, const AugmentParams& params, Rng& rng,
                          AugmentLog* log = nullptr);

/// Removes non-long-tail classes with probability t - w_i.
PointCloud weighted_drop(const PointCloud& frame, const ClassStats& stats,
                         const AugmentParams& params, Rng& rng, AugmentLog* log = nullptr);

/// Common augmentation on both frames, then paste, then drop (per `mode`).
PointCloud wpd(const PointCloud& first, const PointCloud& second, const ClassStats& stats,
               const AugmentParams& params, Rng& rng, AugmentLog* log = nullptr);

}  // namespace rangeseg
