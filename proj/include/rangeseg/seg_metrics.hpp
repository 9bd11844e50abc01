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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rangeseg/kitti_io.hpp"

namespace rangeseg {

/// Confusion counts over train ids 0..K (row = ground truth, column =
/// prediction). Ground-truth ignore points are never counted.
struct ConfusionAccumulator {
  int num_classes = 0;
  int ignore_id = 0;
  std::vector<std::uint64_t> matrix;  // (K+1) × (K+1)

  ConfusionAccumulator() = default;
  ConfusionAccumulator(int num_classes, int ignore_id = 0);

  std::uint64_t at(int gt, int pred) const {
    return matrix[static_cast<std::size_t>(gt) * (num_classes + 1) + pred];
  }
  void merge(const ConfusionAccumulator& other);
  bool operator==(const ConfusionAccumulator&) const = default;
};

void accumulate_semantic(ConfusionAccumulator& acc, std::span<const int> pred,
                         std::span<const int> gt);

struct MiouResult {
  std::vector<std::optional<double>> iou;  // by train id; empty for absent classes
  std::optional<double> mean;              // absent when no class is scored
};

/// IoU_c = TP / (TP + FP + FN). Predictions of the ignore id count for
/// neither FP nor FN, matching the benchmark scorer.
MiouResult miou(const ConfusionAccumulator& acc);

struct PanopticClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double iou_sum = 0.0;
  std::uint64_t sem_intersection = 0;
  std::uint64_t sem_union = 0;

  bool operator==(const PanopticClassCounts&) const = default;
};

struct PanopticAccumulator {
  std::vector<PanopticClassCounts> classes;  // by train id

  PanopticAccumulator() = default;
  explicit PanopticAccumulator(int num_classes);
  void merge(const PanopticAccumulator& other);
  bool operator==(const PanopticAccumulator&) const = default;
};

/// Matches segments of equal class with IoU > 0.5. Thing segments are keyed
/// by (class, instance), stuff segments by class. Ground-truth ignore points
/// are void: they are left out of IoUs, and a prediction lying more than
/// half on void is not a false positive.
void accumulate_panoptic(PanopticAccumulator& acc, const PanopticResult& pred,
                         const PanopticResult& gt, const ClassConfig& cfg);

struct PanopticClassScore {
  int train_id = 0;
  bool present = false;
  double pq = 0.0;
  double rq = 0.0;
  double sq = 0.0;
  std::optional<double> semantic_iou;
};

struct PanopticReport {
  std::vector<PanopticClassScore> classes;  // by train id, slot 0 unused
  std::optional<double> pq, rq, sq;
  std::optional<double> pq_th, rq_th, sq_th;
  std::optional<double> pq_st, rq_st, sq_st;
  std::optional<double> pq_dagger;
  std::optional<double> miou;
};

PanopticReport panoptic_report(const PanopticAccumulator& acc, const ClassConfig& cfg);

std::string semantic_report_json(const MiouResult& result, const ClassConfig& cfg);
std::string semantic_report_table(const MiouResult& result, const ClassConfig& cfg);
std::string panoptic_report_json(const PanopticReport& report, const ClassConfig& cfg);
std::string panoptic_report_table(const PanopticReport& report, const ClassConfig& cfg);

}  // namespace rangeseg
