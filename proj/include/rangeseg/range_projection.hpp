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

#include "rangeseg/grid.hpp"
#include "rangeseg/kitti_io.hpp"

namespace rangeseg {

/// Range-image size and vertical field of view. Angles in radians;
/// fov_down is the positive magnitude below the horizon.
struct SensorGeometry {
  int width = 2048;
  int height = 64;
  double fov_up = 3.0 * 3.14159265358979323846 / 180.0;
  double fov_down = 25.0 * 3.14159265358979323846 / 180.0;

  double fov() const { return fov_up + fov_down; }
  static SensorGeometry from_degrees(int width, int height, double up_deg, double down_deg);
  /// Throws a config error unless W, H >= 1 and fov > 0.
  void validate() const;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  double r = 0.0;
  bool operator==(const PixelCoord&) const = default;
};

/// Pixel and range of one point. Throws a degenerate-input error when r = 0.
PixelCoord project_point(double x, double y, double z, const SensorGeometry& geom);

enum class CollisionRule {
  kNearest,       // smallest range wins, ties go to the lower point index
  kFirstWritten,  // lowest point index wins
};

inline constexpr int kNumRangeChannels = 5;  // x, y, z, rem, r

/// H×W×5 range image plus pixel/point bookkeeping.
struct RangeImage {
  SensorGeometry geometry;
  std::vector<float> data;           // row-major (v, u, channel)
  Grid<std::int32_t> pixel_to_point; // -1 where no point was retained
  std::vector<PixelCoord> point_to_pixel;
  std::size_t skipped_points = 0;    // zero-range points; never retained

  bool valid(int v, int u) const { return pixel_to_point.at(v, u) >= 0; }
  float channel(int v, int u, int c) const {
    return data[(pixel_to_point.index(v, u)) * kNumRangeChannels + c];
  }
  float range(int v, int u) const { return channel(v, u, 4); }
};

RangeImage build_range_image(const PointCloud& cloud, const SensorGeometry& geom,
                             CollisionRule rule = CollisionRule::kNearest);

/// Gives each point the label of its pixel, including points hidden behind
/// the retained one.
std::vector<int> unproject_labels(const LabelImage& labels, const RangeImage& img);

/// Range-view label map holding each retained point's label (fill elsewhere).
LabelImage project_labels(const std::vector<int>& point_labels, const RangeImage& img,
                          int fill = 0);

}  // namespace rangeseg
