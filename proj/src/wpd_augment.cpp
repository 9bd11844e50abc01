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

#include "rangeseg/wpd_augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rangeseg/error.hpp"

namespace rangeseg {
namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void require_labeled(const PointCloud& c, const char* what) {
  if (!c.labeled()) fail(ErrorKind::kDataset, std::string(what) + " must be labeled");
}

bool class_in_range(const ClassStats& stats, int c) {
  return c > 0 && c <= stats.num_classes;
}

}  // namespace

void AugmentParams::validate() const {
  if (!is_probability(p_flip) || !is_probability(p_point_drop)) {
    fail(ErrorKind::kConfig, "augmentation probabilities must lie in [0, 1]");
  }
  if (!(rot_range >= 0.0) || !(trans_range >= 0.0)) {
    fail(ErrorKind::kConfig, "rotation and translation ranges must be non-negative");
  }
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::kConfig, "long-tail threshold must lie in [0, 1]");
}

PointCloud common_augment(const PointCloud& cloud, const AugmentParams& params, Rng& rng) {
  params.validate();
  const bool flip = rng.bernoulli(params.p_flip);
  const double yaw = rng.uniform(-params.rot_range, params.rot_range);
  const double tx = rng.uniform(-params.trans_range, params.trans_range);
  const double ty = rng.uniform(-params.trans_range, params.trans_range);
  const double tz = rng.uniform(-params.trans_range, params.trans_range);
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const bool labeled = cloud.labeled();

  PointCloud out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // One draw per point, even when p_point_drop is 0.
    const bool drop = rng.bernoulli(params.p_point_drop);
    if (drop) continue;
    Point p = cloud.points[i];
    double x = p.x;
    double y = flip ? -static_cast<double>(p.y) : static_cast<double>(p.y);
    const double rx = c * x - s * y;
    const double ry = s * x + c * y;
    p.x = static_cast<float>(rx + tx);
    p.y = static_cast<float>(ry + ty);
    p.z = static_cast<float>(p.z + tz);
    out.points.push_back(p);
    if (labeled) {
      out.semantic.push_back(cloud.semantic[i]);
      out.instance.push_back(cloud.instance[i]);
    }
  }
  return out;
}

PointCloud weighted_paste(const PointCloud& first, const PointCloud& second,
                          const ClassStats& stats, const AugmentParams& params, Rng& rng,
                          AugmentLog* log) {
  params.validate();
  require_labeled(first, "first frame");
  require_labeled(second, "second frame");
  const auto long_tail = long_tail_split(stats, params.t, params.task);
  const auto& w = stats.weights(params.task);

  // Candidate objects of the second frame, keyed (class, instance) in
  // ascending order so draws are reproducible. Stuff classes use key 0.
  std::map<std::pair<int, std::uint32_t>, std::vector<std::size_t>> objects;
  for (std::size_t i = 0; i < second.size(); ++i) {
    const int c = second.semantic[i];
    if (!class_in_range(stats, c) || !long_tail[static_cast<std::size_t>(c)]) continue;
    const std::uint32_t key = stats.is_thing[static_cast<std::size_t>(c)] ? second.instance[i] : 0;
    objects[{c, key}].push_back(i);
  }

  PointCloud out = first;
  std::uint32_t next_id = 0;
  for (std::uint32_t id : first.instance) next_id = std::max(next_id, id);
  if (log != nullptr) log->first_pasted_index = first.size();

  for (const auto& [key, indices] : objects) {
    const auto [c, source_id] = key;
    const double p = std::clamp(w[static_cast<std::size_t>(c)] - params.t, 0.0, 1.0);
    const bool paste = rng.bernoulli(p);
    if (log != nullptr) log->pastes.push_back({c, source_id, p, paste, indices.size()});
    if (!paste) continue;
    std::uint32_t id = 0;
    if (stats.is_thing[static_cast<std::size_t>(c)]) {
      if (next_id >= 0xFFFFu) fail(ErrorKind::kState, "instance ids exhausted while pasting");
      id = ++next_id;
    }
    for (std::size_t i : indices) out.push_back(second.points[i], c, id);
  }
  return out;
}

PointCloud weighted_drop(const PointCloud& frame, const ClassStats& stats,
                         const AugmentParams& params, Rng& rng, AugmentLog* log) {
  params.validate();
  require_labeled(frame, "frame");
  const auto long_tail = long_tail_split(stats, params.t, params.task);
  const auto& w = stats.weights(params.task);
  const auto n = static_cast<std::size_t>(stats.num_classes) + 1;

  std::vector<std::size_t> count(n, 0);
  for (int c : frame.semantic) {
    if (class_in_range(stats, c)) ++count[static_cast<std::size_t>(c)];
  }

  std::vector<double> drop_p(n, 0.0);
  std::vector<bool> drop_all(n, false);
  for (std::size_t c = 1; c < n; ++c) {
    if (count[c] == 0 || long_tail[c]) continue;
    drop_p[c] = std::clamp(params.t - w[c], 0.0, 1.0);
    if (params.drop_granularity == DropGranularity::kClass) {
      drop_all[c] = rng.bernoulli(drop_p[c]);
      if (log != nullptr) {
        log->drops.push_back({static_cast<int>(c), drop_p[c], static_cast<bool>(drop_all[c]),
                              drop_all[c] ? count[c] : 0});
      }
    }
  }

  std::vector<std::size_t> removed(n, 0);
  PointCloud out;
  out.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const int c = frame.semantic[i];
    if (class_in_range(stats, c)) {
      const auto k = static_cast<std::size_t>(c);
      bool drop = drop_all[k];
      if (params.drop_granularity == DropGranularity::kPoint && drop_p[k] > 0.0) {
        drop = rng.bernoulli(drop_p[k]);
      }
      if (drop) {
        ++removed[k];
        continue;
      }
    }
    out.push_back(frame.points[i], c, frame.instance[i]);
  }
  if (log != nullptr && params.drop_granularity == DropGranularity::kPoint) {
    for (std::size_t c = 1; c < n; ++c) {
      if (count[c] == 0 || long_tail[c]) continue;
      log->drops.push_back({static_cast<int>(c), drop_p[c], removed[c] == count[c], removed[c]});
    }
  }
  return out;
}

PointCloud wpd(const PointCloud& first, const PointCloud& second, const ClassStats& stats,
               const AugmentParams& params, Rng& rng, AugmentLog* log) {
  const PointCloud a = common_augment(first, params, rng);
  const PointCloud b = common_augment(second, params, rng);
  switch (params.mode) {
    case WpdMode::kPasteOnly:
      return weighted_paste(a, b, stats, params, rng, log);
    case WpdMode::kDropOnly:
      return weighted_drop(a, stats, params, rng, log);
    case WpdMode::kPasteDrop:
      break;
  }
  const PointCloud pasted = weighted_paste(a, b, stats, params, rng, log);
  PointCloud out = weighted_drop(pasted, stats, params, rng, log);
  // Drop keeps order and never touches long-tail points, so the pasted
  // block stays at the tail.
  if (log != nullptr) log->first_pasted_index = out.size() - (pasted.size() - a.size());
  return out;
}

}  // namespace rangeseg
