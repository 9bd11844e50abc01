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
#include <map>
#include <string>
#include <vector>

namespace rangeseg {

struct Point {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float rem = 0.f;

  bool operator==(const Point&) const = default;
};

/// One LiDAR scan with optional per-point labels.
///
/// `semantic` holds train ids (0 = ignore) and `instance` holds instance ids
/// (0 = none). Both are either empty (unlabeled) or sized like `points`.
struct PointCloud {
  std::vector<Point> points;
  std::vector<int> semantic;
  std::vector<std::uint32_t> instance;

  std::size_t size() const { return points.size(); }
  bool labeled() const {
    return semantic.size() == points.size() && instance.size() == points.size();
  }
  void reserve(std::size_t n) {
    points.reserve(n);
    semantic.reserve(n);
    instance.reserve(n);
  }
  void push_back(const Point& p, int sem, std::uint32_t ins) {
    points.push_back(p);
    semantic.push_back(sem);
    instance.push_back(ins);
  }

  bool operator==(const PointCloud&) const = default;
};

/// Per-point prediction: train id plus instance id.
struct PanopticResult {
  std::vector<int> semantic;
  std::vector<std::uint32_t> instance;

  std::size_t size() const { return semantic.size(); }
  bool operator==(const PanopticResult&) const = default;
};

/// Dataset class layout. Train ids run 0..num_classes with 0 reserved for
/// ignore; the network-side class index of train id t is t - 1.
struct ClassConfig {
  int num_classes = 0;
  int ignore_id = 0;
  std::map<std::uint32_t, int> raw_to_train;
  std::vector<std::uint32_t> train_to_raw;  // size num_classes + 1
  std::vector<std::string> names;           // size num_classes + 1
  std::vector<bool> is_thing;               // size num_classes + 1

  int to_train(std::uint32_t raw) const;
  /// Throws a config error for ids outside 0..num_classes.
  std::uint32_t to_raw(int train_id) const;

  static int train_id_of_index(int class_index) { return class_index + 1; }
  static int index_of_train_id(int train_id) { return train_id - 1; }

  /// Validates the invariants; throws a config error on violation.
  void validate() const;
};

/// Reads an N×16-byte scan (4 little-endian floats per point).
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

struct LabelArrays {
  std::vector<int> semantic;
  std::vector<std::uint32_t> instance;
};

/// Reads an N×4-byte label file; low 16 bits raw semantic id, high 16 bits
/// instance id. Unknown raw ids map to ignore.
LabelArrays read_labels(const std::filesystem::path& path, const ClassConfig& cfg);

/// Moves labels into a cloud; throws a malformed-input error on length mismatch.
void attach_labels(PointCloud& cloud, LabelArrays labels);

void write_labels(const std::filesystem::path& path, const PanopticResult& result,
                  const ClassConfig& cfg);

/// Loads and validates a JSON class configuration.
ClassConfig load_class_config(const std::filesystem::path& path);
ClassConfig parse_class_config(const std::string& text);

/// SemanticKITTI 19-class layout, the same content as
/// configs/semantic_kitti.json.
ClassConfig semantic_kitti_config();

}  // namespace rangeseg
