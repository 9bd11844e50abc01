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
#include <string>
#include <vector>

#include "rangeseg/kitti_io.hpp"

namespace rangeseg {

enum class Task { kSemantic, kPanoptic };

Task parse_task(const std::string& name);
const char* to_string(Task task);

/// Raw dataset counts. All per-class vectors are indexed by train id
/// (size num_classes + 1, slot 0 unused).
struct StatsAccumulator {
  std::vector<std::uint64_t> points;
  std::vector<std::uint64_t> sem;
  std::vector<std::uint64_t> ins;
  std::uint64_t total_points = 0;
  std::uint64_t frames = 0;

  StatsAccumulator() = default;
  explicit StatsAccumulator(int num_classes);

  int num_classes() const { return static_cast<int>(points.size()) - 1; }
  void merge(const StatsAccumulator& other);
  bool operator==(const StatsAccumulator&) const = default;
};

void accumulate_frame(StatsAccumulator& acc, const PointCloud& cloud, const ClassConfig& cfg);

/// Per-class statistics and normalized re-balance weights, indexed by train id.
struct ClassStats {
  int num_classes = 0;
  double eps = 1e-3;
  std::vector<double> f;
  std::vector<double> sem;
  std::vector<double> ins;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> w_sem;
  std::vector<double> w_pan;
  std::vector<bool> is_thing;
  std::vector<std::string> names;

  const std::vector<double>& weights(Task task) const {
    return task == Task::kSemantic ? w_sem : w_pan;
  }
};

inline constexpr double kDefaultEps = 1e-3;
inline constexpr double kDefaultLongTailThreshold = 0.1;

/// Throws a dataset error when no labeled points were seen.
ClassStats finalize(const StatsAccumulator& acc, double eps, const ClassConfig& cfg);

/// Builds statistics from externally supplied proportions and segment counts
/// (e.g. the published SemanticKITTI values). Vectors indexed by train id.
ClassStats stats_from_frequencies(const std::vector<double>& f, const std::vector<double>& sem,
                                  const std::vector<double>& ins, double eps,
                                  const ClassConfig& cfg);

/// flag[i] = w_i > t for every class; the ignore slot is always false.
std::vector<bool> long_tail_split(const ClassStats& stats, double t, Task task);

/// JSON document holding both the raw counts (when known) and derived values.
std::string stats_to_json(const ClassStats& stats, const StatsAccumulator* counts);
ClassStats stats_from_json(const std::string& text, const ClassConfig& cfg,
                           StatsAccumulator* counts = nullptr);
void save_stats(const std::filesystem::path& path, const ClassStats& stats,
                const StatsAccumulator* counts);
ClassStats load_stats(const std::filesystem::path& path, const ClassConfig& cfg,
                      StatsAccumulator* counts = nullptr);

/// Class-wise table laid out like the published statistics table.
std::string format_stats_table(const ClassStats& stats);

}  // namespace rangeseg
