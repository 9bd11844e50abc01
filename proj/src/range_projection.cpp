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

#include "rangeseg/range_projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rangeseg/error.hpp"

namespace rangeseg {

SensorGeometry SensorGeometry::from_degrees(int width, int height, double up_deg,
                                            double down_deg) {
  SensorGeometry g;
  g.width = width;
  g.height = height;
  g.fov_up = up_deg * std::numbers::pi / 180.0;
  g.fov_down = down_deg * std::numbers::pi / 180.0;
  g.validate();
  return g;
}

void SensorGeometry::validate() const {
  if (width < 1 || height < 1) fail(ErrorKind::kConfig, "range image must be at least 1x1");
  if (!(fov() > 0.0)) fail(ErrorKind::kConfig, "vertical field of view must be positive");
}

PixelCoord project_point(double x, double y, double z, const SensorGeometry& geom) {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (!(r > 0.0)) fail(ErrorKind::kDegenerate, "zero-range point cannot be projected");
  const double yaw = std::atan2(y, x);
  const double pitch = std::asin(std::clamp(z / r, -1.0, 1.0));
  const double u = 0.5 * (1.0 - yaw / std::numbers::pi) * geom.width;
  const double v = (1.0 - (pitch + geom.fov_up) / geom.fov()) * geom.height;
  PixelCoord px;
  px.u = static_cast<int>(std::clamp(std::floor(u), 0.0, geom.width - 1.0));
  px.v = static_cast<int>(std::clamp(std::floor(v), 0.0, geom.height - 1.0));
  px.r = r;
  return px;
}

RangeImage build_range_image(const PointCloud& cloud, const SensorGeometry& geom,
                             CollisionRule rule) {
  geom.validate();
  RangeImage img;
  img.geometry = geom;
  img.pixel_to_point = Grid<std::int32_t>(geom.height, geom.width, -1);
  img.data.assign(img.pixel_to_point.size() * kNumRangeChannels, 0.f);
  img.point_to_pixel.resize(cloud.size());

  std::vector<double> best(img.pixel_to_point.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    PixelCoord px;
    try {
      px = project_point(p.x, p.y, p.z, geom);
    } catch (const Error&) {
      // Parked at the horizon straight ahead so it still gets a label;
      // r = 0 keeps it out of the z-buffer.
      ++img.skipped_points;
      px = project_point(1.0, 0.0, 0.0, geom);
      px.r = 0.0;
      img.point_to_pixel[i] = px;
      continue;
    }
    img.point_to_pixel[i] = px;
    const std::size_t idx = img.pixel_to_point.index(px.v, px.u);
    const std::int32_t held = img.pixel_to_point.data[idx];
    const bool take = held < 0 || (rule == CollisionRule::kNearest && px.r < best[idx]);
    if (!take) continue;
    img.pixel_to_point.data[idx] = static_cast<std::int32_t>(i);
    best[idx] = px.r;
    float* cell = &img.data[idx * kNumRangeChannels];
    cell[0] = p.x;
    cell[1] = p.y;
    cell[2] = p.z;
    cell[3] = p.rem;
    cell[4] = static_cast<float>(px.r);
  }
  return img;
}

std::vector<int> unproject_labels(const LabelImage& labels, const RangeImage& img) {
  if (labels.height != img.geometry.height || labels.width != img.geometry.width) {
    fail(ErrorKind::kShape, "label map is " + std::to_string(labels.height) + "x" +
                                std::to_string(labels.width) + ", range image is " +
                                std::to_string(img.geometry.height) + "x" +
                                std::to_string(img.geometry.width));
  }
  std::vector<int> out(img.point_to_pixel.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const PixelCoord& px = img.point_to_pixel[i];
    out[i] = labels.at(px.v, px.u);
  }
  return out;
}

LabelImage project_labels(const std::vector<int>& point_labels, const RangeImage& img,
                          int fill) {
  if (point_labels.size() != img.point_to_pixel.size()) {
    fail(ErrorKind::kShape, "label count does not match projected point count");
  }
  LabelImage out(img.geometry.height, img.geometry.width, fill);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::int32_t p = img.pixel_to_point.data[k];
    if (p >= 0) out.data[k] = point_labels[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace rangeseg
