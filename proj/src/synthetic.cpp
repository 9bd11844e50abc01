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

#include "rangeseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/rng.hpp"

namespace rangeseg {
namespace {

constexpr double kSensorHeight = 1.73;
constexpr double kWallRadius = 40.0;
constexpr double kWallTop = 20.0;

struct Column {
  double cx, cy, radius, z_top;
  int train_id;
  std::uint32_t instance;
  float remission;
};

struct ClassRoles {
  int road, sidewalk, terrain, wall, pole;
  std::vector<int> things;
};

int by_name(const ClassConfig& cfg, const std::string& name) {
  auto it = std::find(cfg.names.begin(), cfg.names.end(), name);
  return it == cfg.names.end() ? -1 : static_cast<int>(it - cfg.names.begin());
}

ClassRoles pick_roles(const ClassConfig& cfg) {
  ClassRoles r{};
  std::vector<int> stuff;
  for (int t = 1; t <= cfg.num_classes; ++t) {
    (cfg.is_thing[static_cast<std::size_t>(t)] ? r.things : stuff).push_back(t);
  }
  if (stuff.empty()) stuff = r.things;
  if (r.things.empty()) r.things = stuff;
  auto role = [&](const char* name, std::size_t fallback) {
    const int id = by_name(cfg, name);
    return id >= 0 ? id : stuff[std::min(fallback, stuff.size() - 1)];
  };
  r.road = role("road", 0);
  r.sidewalk = role("sidewalk", 1);
  r.terrain = role("terrain", 2);
  r.wall = role("building", 3);
  r.pole = role("pole", 4);
  return r;
}

}  // namespace

ClassConfig synthetic_class_config(int num_classes, int num_things) {
  if (num_classes < 1 || num_things < 0 || num_things > num_classes) {
    fail(ErrorKind::kConfig, "invalid synthetic class layout");
  }
  ClassConfig cfg;
  cfg.num_classes = num_classes;
  cfg.ignore_id = 0;
  const auto n = static_cast<std::size_t>(num_classes) + 1;
  cfg.train_to_raw.resize(n);
  cfg.names.resize(n);
  cfg.is_thing.assign(n, false);
  cfg.names[0] = "unlabeled";
  for (int t = 0; t <= num_classes; ++t) {
    cfg.raw_to_train[static_cast<std::uint32_t>(t)] = t;
    cfg.train_to_raw[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(t);
    if (t > 0) {
      cfg.names[static_cast<std::size_t>(t)] = "class" + std::to_string(t);
      cfg.is_thing[static_cast<std::size_t>(t)] = t <= num_things;
    }
  }
  cfg.validate();
  return cfg;
}

PointCloud synthetic_scan(const ClassConfig& cfg, const SensorGeometry& geom,
                          const SyntheticSceneParams& params, std::uint64_t seed, int frame) {
  geom.validate();
  if (params.azimuth_steps < 1) fail(ErrorKind::kConfig, "azimuth_steps must be positive");
  const ClassRoles roles = pick_roles(cfg);
  Rng layout(seed);

  std::vector<Column> columns;
  for (int i = 0; i < params.num_objects; ++i) {
    const double dist = layout.uniform(5.0, 30.0);
    const double ang = layout.uniform(-std::numbers::pi, std::numbers::pi);
    const bool moving = layout.bernoulli(0.5);
    const int cls = roles.things[layout.below(roles.things.size())];
    const double radius = layout.uniform(0.3, 2.0);
    const double height = layout.uniform(1.0, 2.5);
    const float rem = static_cast<float>(layout.uniform(0.1, 0.9));
    const double shift = moving ? params.speed * frame : 0.0;
    columns.push_back({dist * std::cos(ang) + shift, dist * std::sin(ang), radius,
                       height - kSensorHeight, cls, static_cast<std::uint32_t>(i + 1), rem});
  }
  for (int i = 0; i < params.num_poles; ++i) {
    const double dist = layout.uniform(4.0, 35.0);
    const double ang = layout.uniform(-std::numbers::pi, std::numbers::pi);
    columns.push_back({dist * std::cos(ang), dist * std::sin(ang), 0.15, 8.0, roles.pole, 0,
                       0.6f});
  }

  Rng noise = Rng::derive(seed, static_cast<std::uint64_t>(frame));
  PointCloud cloud;
  for (int row = 0; row < geom.height; ++row) {
    // One beam per image row under the projection's pitch mapping, so each
    // return lands in its own row.
    const double el = geom.fov_down - (row + 0.5) / geom.height * geom.fov();
    const double ce = std::cos(el);
    const double se = std::sin(el);
    for (int step = 0; step < params.azimuth_steps; ++step) {
      const double az =
          std::numbers::pi * (1.0 - 2.0 * (step + 0.5) / params.azimuth_steps);
      const double dx = ce * std::cos(az);
      const double dy = ce * std::sin(az);

      double best = kWallRadius / ce;
      int cls = roles.wall;
      std::uint32_t ins = 0;
      float rem = 0.3f;
      if (best * se > kWallTop) best = std::numeric_limits<double>::infinity();
      if (se < 0.0) {
        const double t = -kSensorHeight / se;
        if (t < best) {
          best = t;
          const double y = std::abs(t * dy);
          cls = y < 4.0 ? roles.road : (y < 6.0 ? roles.sidewalk : roles.terrain);
          rem = y < 4.0 ? 0.2f : 0.4f;
        }
      }
      for (const Column& c : columns) {
        const double b = dx * c.cx + dy * c.cy;
        const double disc = b * b - (ce * ce) * (c.cx * c.cx + c.cy * c.cy - c.radius * c.radius);
        if (disc < 0.0) continue;
        const double t = (b - std::sqrt(disc)) / (ce * ce);
        if (t <= 0.0 || t >= best) continue;
        const double z = t * se;
        if (z < -kSensorHeight || z > c.z_top) continue;
        best = t;
        cls = c.train_id;
        ins = c.instance;
        rem = c.remission;
      }
      if (!std::isfinite(best)) continue;
      const double r = best + noise.uniform(-params.range_noise, params.range_noise);
      cloud.push_back({static_cast<float>(r * dx), static_cast<float>(r * dy),
                       static_cast<float>(r * se), rem},
                      cls, cfg.is_thing[static_cast<std::size_t>(cls)] ? ins : 0);
    }
  }
  return cloud;
}

void write_synthetic_sequence(const std::filesystem::path& root, const std::string& sequence,
                              int frames, const ClassConfig& cfg, const SensorGeometry& geom,
                              const SyntheticSceneParams& params, std::uint64_t seed) {
  const auto dir = root / "sequences" / sequence;
  std::filesystem::create_directories(dir / "velodyne");
  std::filesystem::create_directories(dir / "labels");
  for (int f = 0; f < frames; ++f) {
    const PointCloud cloud = synthetic_scan(cfg, geom, params, seed, f);
    char name[16];
    std::snprintf(name, sizeof name, "%06d", f);
    write_point_cloud(dir / "velodyne" / (std::string(name) + ".bin"), cloud);
    write_labels(dir / "labels" / (std::string(name) + ".label"),
                 PanopticResult{cloud.semantic, cloud.instance}, cfg);
  }
}

}  // namespace rangeseg
