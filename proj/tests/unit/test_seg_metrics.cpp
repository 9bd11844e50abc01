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

#include <random>

#include "doctest.h"
#include "rangeseg/error.hpp"
#include "rangeseg/seg_metrics.hpp"

using namespace rangeseg;

namespace {

constexpr int kCar = 1;     // thing
constexpr int kPerson = 6;  // thing
constexpr int kRoad = 9;    // stuff

PanopticResult pan(std::vector<int> sem, std::vector<std::uint32_t> ins) {
  return {std::move(sem), std::move(ins)};
}

PanopticResult random_scene(std::mt19937_64& gen, std::size_t n) {
  std::uniform_int_distribution<int> cls(0, 19), inst(1, 3);
  PanopticResult r;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = cls(gen);
    r.semantic.push_back(c);
    r.instance.push_back(c >= 1 && c <= 8 ? static_cast<std::uint32_t>(inst(gen)) : 0u);
  }
  return r;
}

}  // namespace

TEST_CASE("confusion accumulation") {
  ConfusionAccumulator acc(19);
  const std::vector<int> gt = {1, 2, 0};
  const std::vector<int> pred = {1, 1, 2};
  accumulate_semantic(acc, pred, gt);
  std::uint64_t total = 0;
  for (auto v : acc.matrix) total += v;
  CHECK(total == 2);
  CHECK(acc.at(1, 1) == 1);
  CHECK(acc.at(2, 1) == 1);

  ConfusionAccumulator ignored(19);
  const std::vector<int> all_ignore = {0, 0, 0};
  accumulate_semantic(ignored, pred, all_ignore);
  CHECK(ignored == ConfusionAccumulator(19));

  ConfusionAccumulator diag(19);
  accumulate_semantic(diag, gt, gt);
  for (int r = 0; r <= 19; ++r) {
    for (int c = 0; c <= 19; ++c) {
      if (r != c) CHECK(diag.at(r, c) == 0);
    }
  }

  const std::vector<int> short_pred = {1};
  CHECK_THROWS_AS(accumulate_semantic(acc, short_pred, gt), Error);
}

TEST_CASE("mIoU") {
  ConfusionAccumulator acc(19);
  const std::vector<int> gt = {1, 1, 2, 2};
  const std::vector<int> pred = {1, 2, 2, 2};
  accumulate_semantic(acc, pred, gt);
  const MiouResult r = miou(acc);
  REQUIRE(r.iou[1].has_value());
  REQUIRE(r.iou[2].has_value());
  CHECK(*r.iou[1] == doctest::Approx(0.5));
  CHECK(*r.iou[2] == doctest::Approx(2.0 / 3.0));
  CHECK(!r.iou[3].has_value());
  CHECK(*r.mean == doctest::Approx(7.0 / 12.0));

  ConfusionAccumulator perfect(19);
  accumulate_semantic(perfect, gt, gt);
  CHECK(*miou(perfect).mean == 1.0);

  const MiouResult empty = miou(ConfusionAccumulator(19));
  CHECK(!empty.mean.has_value());
  for (const auto& v : empty.iou) CHECK(!v.has_value());
}

TEST_CASE("swapping two class ids only hurts those classes") {
  std::mt19937_64 gen(71);
  std::uniform_int_distribution<int> cls(1, 19);
  std::vector<int> gt(500), pred;
  for (int& v : gt) v = cls(gen);
  for (int v : gt) pred.push_back(v == 3 ? 5 : v == 5 ? 3 : v);
  ConfusionAccumulator acc(19);
  accumulate_semantic(acc, pred, gt);
  const MiouResult r = miou(acc);
  for (int c = 1; c <= 19; ++c) {
    if (c == 3 || c == 5) {
      CHECK(*r.iou[static_cast<std::size_t>(c)] == 0.0);
    } else {
      CHECK(*r.iou[static_cast<std::size_t>(c)] == 1.0);
    }
  }
}

TEST_CASE("panoptic single-segment traces") {
  const ClassConfig cfg = semantic_kitti_config();
  const PanopticResult gt = pan({kCar, kCar, kCar, kCar, kCar}, {1, 1, 1, 1, 1});

  SUBCASE("IoU 0.6 matches") {
    PanopticAccumulator acc(19);
    accumulate_panoptic(acc, pan({kCar, kCar, kCar, 0, 0}, {7, 7, 7, 0, 0}), gt, cfg);
    const auto& c = acc.classes[kCar];
    CHECK(c.tp == 1);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.iou_sum == doctest::Approx(0.6));
    const PanopticReport r = panoptic_report(acc, cfg);
    CHECK(r.classes[kCar].pq == doctest::Approx(0.6));
    CHECK(r.classes[kCar].rq == doctest::Approx(1.0));
    CHECK(r.classes[kCar].sq == doctest::Approx(0.6));
  }

  SUBCASE("IoU 0.4 does not") {
    PanopticAccumulator acc(19);
    accumulate_panoptic(acc, pan({kCar, kCar, 0, 0, 0}, {7, 7, 0, 0, 0}), gt, cfg);
    const auto& c = acc.classes[kCar];
    CHECK(c.tp == 0);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(panoptic_report(acc, cfg).classes[kCar].pq == 0.0);
  }

  SUBCASE("perfect prediction") {
    PanopticAccumulator acc(19);
    const PanopticResult scene = pan({kCar, kCar, kPerson, kRoad, kRoad, 0}, {1, 1, 4, 0, 0, 0});
    accumulate_panoptic(acc, scene, scene, cfg);
    const PanopticReport r = panoptic_report(acc, cfg);
    for (int c : {kCar, kPerson, kRoad}) {
      CHECK(r.classes[static_cast<std::size_t>(c)].present);
      CHECK(r.classes[static_cast<std::size_t>(c)].pq == 1.0);
      CHECK(r.classes[static_cast<std::size_t>(c)].rq == 1.0);
      CHECK(r.classes[static_cast<std::size_t>(c)].sq == 1.0);
    }
    CHECK(*r.pq == 1.0);
    CHECK(*r.miou == 1.0);
  }

  SUBCASE("length mismatch") {
    PanopticAccumulator acc(19);
    CHECK_THROWS_AS(accumulate_panoptic(acc, pan({kCar}, {1}), gt, cfg), Error);
  }
}

TEST_CASE("panoptic void handling") {
  const ClassConfig cfg = semantic_kitti_config();
  // A predicted car lying mostly on unlabeled points is not a false positive.
  const PanopticResult gt = pan({0, 0, 0, kRoad, kRoad}, {0, 0, 0, 0, 0});
  const PanopticResult pred = pan({kCar, kCar, kCar, kCar, kRoad}, {2, 2, 2, 2, 0});
  PanopticAccumulator acc(19);
  accumulate_panoptic(acc, pred, gt, cfg);
  CHECK(acc.classes[kCar].fp == 0);
  // Road: pred segment {4}, gt segment {3,4}: IoU 1/2 is not > 0.5.
  CHECK(acc.classes[kRoad].tp == 0);
  CHECK(acc.classes[kRoad].fn == 1);
  CHECK(acc.classes[kRoad].fp == 1);

  // Void points do not enlarge the union.
  const PanopticResult gt2 = pan({kRoad, kRoad, 0}, {0, 0, 0});
  const PanopticResult pred2 = pan({kRoad, kRoad, kRoad}, {0, 0, 0});
  PanopticAccumulator acc2(19);
  accumulate_panoptic(acc2, pred2, gt2, cfg);
  CHECK(acc2.classes[kRoad].tp == 1);
  CHECK(acc2.classes[kRoad].iou_sum == 1.0);
}

TEST_CASE("panoptic report aggregates") {
  const ClassConfig cfg = semantic_kitti_config();
  // Car PQ 0.6 (IoU 0.6 match), road perfect.
  const PanopticResult gt =
      pan({kCar, kCar, kCar, kCar, kCar, kRoad, kRoad}, {1, 1, 1, 1, 1, 0, 0});
  const PanopticResult pred = pan({kCar, kCar, kCar, 0, 0, kRoad, kRoad}, {3, 3, 3, 0, 0, 0, 0});
  PanopticAccumulator acc(19);
  accumulate_panoptic(acc, pred, gt, cfg);
  const PanopticReport r = panoptic_report(acc, cfg);
  CHECK(*r.pq == doctest::Approx((0.6 + 1.0) / 2));
  CHECK(*r.pq_th == doctest::Approx(0.6));
  CHECK(*r.pq_st == doctest::Approx(1.0));
  CHECK(*r.rq == doctest::Approx(1.0));
  CHECK(*r.sq == doctest::Approx(0.8));
  // Road semantic IoU is 1; car PQ stays 0.6.
  CHECK(*r.pq_dagger == doctest::Approx(0.8));

  for (const auto& c : r.classes) {
    if (c.present && c.rq > 0) CHECK(c.pq == doctest::Approx(c.rq * c.sq).epsilon(1e-15));
  }

  // Only stuff present: thing aggregates are absent.
  PanopticAccumulator stuff(19);
  const PanopticResult roads = pan({kRoad, kRoad}, {0, 0});
  accumulate_panoptic(stuff, roads, roads, cfg);
  const PanopticReport s = panoptic_report(stuff, cfg);
  CHECK(!s.pq_th.has_value());
  CHECK(s.pq_st.has_value());

  CHECK(panoptic_report_json(r, cfg).find("\"pq\"") != std::string::npos);
  CHECK(panoptic_report_table(r, cfg).find("car") != std::string::npos);
  CHECK(semantic_report_json(miou(ConfusionAccumulator(19)), cfg).find("null") != std::string::npos);
}

TEST_CASE("accumulators merge like a single pass") {
  const ClassConfig cfg = semantic_kitti_config();
  std::mt19937_64 gen(72);
  std::vector<PanopticResult> preds, gts;
  for (int f = 0; f < 6; ++f) {
    gts.push_back(random_scene(gen, 200));
    PanopticResult p = gts.back();
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (u(gen) < 0.2) p.semantic[i] = (p.semantic[i] + 1) % 20;
    }
    preds.push_back(p);
  }
  ConfusionAccumulator whole(19), a(19), b(19);
  PanopticAccumulator pwhole(19), pa(19), pb(19);
  for (int f = 0; f < 6; ++f) {
    accumulate_semantic(whole, preds[f].semantic, gts[f].semantic);
    accumulate_semantic(f < 2 ? a : b, preds[f].semantic, gts[f].semantic);
    accumulate_panoptic(pwhole, preds[f], gts[f], cfg);
    accumulate_panoptic(f < 2 ? pa : pb, preds[f], gts[f], cfg);
  }
  a.merge(b);
  CHECK(a == whole);
  pa.merge(pb);
  for (std::size_t c = 0; c < pa.classes.size(); ++c) {
    CHECK(pa.classes[c].tp == pwhole.classes[c].tp);
    CHECK(pa.classes[c].fp == pwhole.classes[c].fp);
    CHECK(pa.classes[c].fn == pwhole.classes[c].fn);
    CHECK(pa.classes[c].iou_sum == doctest::Approx(pwhole.classes[c].iou_sum));
    CHECK(pa.classes[c].iou_sum <= static_cast<double>(pa.classes[c].tp));
    CHECK(pa.classes[c].iou_sum >= static_cast<double>(pa.classes[c].tp) / 2);
  }

  // Self-evaluation.
  ConfusionAccumulator self(19);
  PanopticAccumulator pself(19);
  for (const auto& g : gts) {
    accumulate_semantic(self, g.semantic, g.semantic);
    accumulate_panoptic(pself, g, g, cfg);
  }
  CHECK(*miou(self).mean == 1.0);
  CHECK(*panoptic_report(pself, cfg).pq == doctest::Approx(1.0));
}
