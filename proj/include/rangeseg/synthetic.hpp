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
#include <filesystem>

#include "rangeseg/kitti_io.hpp"
#include "rangeseg/range_projection.hpp"

namespace rangeseg {

/// K-class layout with raw id = train id; the first `num_things` classes are
/// things. Names are "class1", "class2", ...
ClassConfig synthetic_class_config(int num_classes, int num_things);

struct SyntheticSceneParams {
  int azimuth_steps = 512;
  int num_objects = 12;   // thing instances
  int num_poles = 6;      // thin stuff columns
  double speed = 0.5;     // meters per frame along x for moving objects
  double range_noise = 0.01;
};

/// Ray-cast scan of a street-like scene: ground, an enclosing wall, thing
/// cylinders with instance ids and thin stuff columns. One ray per beam and
/// azimuth step; rays that hit nothing produce no point. Classes are picked
/// by name when `cfg` has the SemanticKITTI names, otherwise by role.
/// The layout depends on `seed`; objects move with `frame`.
PointCloud synthetic_scan(const ClassConfig& cfg, const SensorGeometry& geom,
                          const SyntheticSceneParams& params, std::uint64_t seed, int frame);

/// Writes `frames` scans of one sequence in the dataset layout
/// root/sequences/<seq>/{velodyne,labels}/NNNNNN.{bin,label}.
void write_synthetic_sequence(const std::filesystem::path& root, const std::string& sequence,
                              int frames, const ClassConfig& cfg, const SensorGeometry& geom,
                              const SyntheticSceneParams& params, std::uint64_t seed);

}  // namespace rangeseg
