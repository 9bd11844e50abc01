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
#include <set>

#include "doctest.h"
#include "rangeseg/error.hpp"
#include "rangeseg/rng.hpp"
#include "rangeseg/synthetic.hpp"
#include "rangeseg/wpd_augment.hpp"
#include "support/oracles.hpp"

using namespace rangeseg;

namespace {

ClassStats published_stats() {
  const ClassConfig cfg = semantic_kitti_config();
  std::vector<double> f(20, 0.0), sem(20, 0.0), ins(20, 0.0);
  for (std::size_t i = 0; i < oracle::kPublished.size(); ++i) {
    f[i + 1] = oracle::kPublished[i].f;
    sem[i + 1] = oracle::kPublished[i].sem;
    ins[i + 1] = oracle::kPublished[i].ins;
  }
  return stats_from_frequencies(f, sem, ins, 1e-3, cfg);
}

AugmentParams quiet_params() {
  AugmentParams p;
  p.p_flip = 0.0;
  p.rot_range = 0.0;
  p.trans_range = 0.0;
  p.p_point_drop = 0.0;
  return p;
}

// car (1), bicycle (2) in two instances, road (9), pole (18), other-ground (12).
PointCloud sample_frame(float offset) {
  PointCloud c;
  for (int i = 0; i < 10; ++i) {
    const float x = offset + static_cast<float>(i);
    c.push_back({x, 1, 0, 0.1f}, 1, 1);
    c.push_back({x, 2, 0, 0.2f}, 2, 1 + static_cast<std::uint32_t>(i % 2));
    c.push_back({x, 3, 0, 0.3f}, 9, 0);
    c.push_back({x, 4, 0, 0.4f}, 18, 0);
    c.push_back({x, 5, 0, 0.5f}, 12, 0);
  }
  return c;
}

}  // namespace

TEST_CASE("common augmentation with all transforms off is the identity") {
  Rng rng(1);
  const PointCloud c = sample_frame(1.0f);
  CHECK(common_augment(c, quiet_params(), rng) == c);
}

TEST_CASE("yaw rotation preserves ranges and heights") {
  AugmentParams p = quiet_params();
  p.rot_range = oracle::kPi;
  const PointCloud c = sample_frame(3.0f);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const PointCloud out = common_augment(c, p, rng);
    REQUIRE(out.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double r0 = std::hypot(c.points[i].x, c.points[i].y);
      const double r1 = std::hypot(out.points[i].x, out.points[i].y);
      CHECK(r1 == doctest::Approx(r0).epsilon(1e-6));
      CHECK(out.points[i].z == c.points[i].z);
      CHECK(out.semantic[i] == c.semantic[i]);
    }
  }
}

TEST_CASE("flip negates y and full point drop empties the cloud") {
  AugmentParams p = quiet_params();
  p.p_flip = 1.0;
  Rng rng(2);
  const PointCloud c = sample_frame(0.0f);
  const PointCloud flipped = common_augment(c, p, rng);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(flipped.points[i].y == -c.points[i].y);
  p.p_point_drop = 1.0;
  CHECK(common_augment(c, p, rng).size() == 0);
}

TEST_CASE("paste probability is w - t and only long-tail objects are considered") {
  const ClassStats s = published_stats();
  const AugmentParams p = quiet_params();
  Rng rng(4);
  AugmentLog log;
  const PointCloud out = weighted_paste(sample_frame(0), sample_frame(50), s, p, rng, &log);
  std::set<int> classes;
  for (const auto& d : log.pastes) {
    classes.insert(d.class_id);
    CHECK(d.probability == doctest::Approx(s.w_sem[static_cast<std::size_t>(d.class_id)] - 0.1));
  }
  CHECK(classes == std::set<int>{2, 12, 18});  // car and road never qualify
  for (const auto& d : log.pastes) {
    if (d.class_id == 2) CHECK(d.probability == doctest::Approx(0.79).epsilon(0.02));
  }
  CHECK(log.pastes.size() == 4);  // two bicycle instances decided independently
  for (std::size_t i = log.first_pasted_index; i < out.size(); ++i) {
    CHECK(s.w_sem[static_cast<std::size_t>(out.semantic[i])] > 0.1);
  }
}

TEST_CASE("pasted thing instances get fresh ids") {
  ClassStats s = published_stats();
  AugmentParams p = quiet_params();
  p.t = 0.0;
  // Every class becomes long-tail with paste probability 1.
  for (std::size_t i = 1; i < s.w_sem.size(); ++i) s.w_sem[i] = 1.0;
  Rng rng(0);
  AugmentLog log;
  const PointCloud first = sample_frame(0);
  const PointCloud out = weighted_paste(first, sample_frame(50), s, p, rng, &log);
  std::set<std::uint32_t> original_bicycles, pasted_bicycles;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.semantic[i] != 2) continue;
    (i < first.size() ? original_bicycles : pasted_bicycles).insert(out.instance[i]);
  }
  CHECK(pasted_bicycles.size() == 2);
  for (auto id : pasted_bicycles) CHECK(original_bicycles.count(id) == 0);
  for (std::size_t i = first.size(); i < out.size(); ++i) {
    if (!s.is_thing[static_cast<std::size_t>(out.semantic[i])]) CHECK(out.instance[i] == 0);
  }
}

TEST_CASE("pasting from an empty frame returns the first frame") {
  const ClassStats s = published_stats();
  Rng rng(5);
  PointCloud empty;
  const PointCloud first = sample_frame(0);
  CHECK(weighted_paste(first, empty, s, quiet_params(), rng) == first);
}

TEST_CASE("drop probability is t - w and long-tail classes are never dropped") {
  const ClassStats s = published_stats();
  const AugmentParams p = quiet_params();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    AugmentLog log;
    const PointCloud frame = sample_frame(0);
    const PointCloud out = weighted_drop(frame, s, p, rng, &log);
    for (const auto& d : log.drops) {
      CHECK((d.class_id == 1 || d.class_id == 9));
      CHECK(d.probability ==
            doctest::Approx(0.1 - s.w_sem[static_cast<std::size_t>(d.class_id)]));
    }
    std::size_t tail_in = 0, tail_out = 0;
    for (int c : frame.semantic) tail_in += s.w_sem[static_cast<std::size_t>(c)] > 0.1;
    for (int c : out.semantic) tail_out += s.w_sem[static_cast<std::size_t>(c)] > 0.1;
    CHECK(tail_in == tail_out);
  }
  const ClassStats pub = published_stats();
  CHECK(0.1 - pub.w_sem[9] == doctest::Approx(0.09).epsilon(0.05));
}

TEST_CASE("threshold zero leaves no class to drop") {
  const ClassStats s = published_stats();
  AugmentParams p = quiet_params();
  p.t = 0.0;
  Rng rng(3);
  // vegetation has w_sem > 0 once unrounded, so every present class is long-tail.
  const PointCloud frame = sample_frame(0);
  CHECK(weighted_drop(frame, s, p, rng) == frame);
}

TEST_CASE("wpd is deterministic under a seed and never loses long-tail points") {
  const ClassStats s = published_stats();
  AugmentParams p;
  p.trans_range = 0.5;
  p.p_point_drop = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1(seed), r2(seed);
    AugmentLog log;
    const PointCloud a = wpd(sample_frame(0), sample_frame(40), s, p, r1, &log);
    const PointCloud b = wpd(sample_frame(0), sample_frame(40), s, p, r2);
    CHECK(a == b);
    std::size_t tail = 0;
    for (int c : a.semantic) tail += s.w_sem[static_cast<std::size_t>(c)] > 0.1;
    CHECK(tail >= 30);
    for (std::size_t i = log.first_pasted_index; i < a.size(); ++i) {
      CHECK(s.w_sem[static_cast<std::size_t>(a.semantic[i])] > 0.1);
    }
  }
}

TEST_CASE("augment parameters are validated") {
  AugmentParams p;
  p.p_flip = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = AugmentParams{};
  p.rot_range = -1;
  CHECK_THROWS_AS(p.validate(), Error);
}
