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

#include "rangeseg/kitti_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rangeseg/error.hpp"

namespace rangeseg {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kDataset, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t load_word(const char* p) {
  std::uint32_t w;
  std::memcpy(&w, p, 4);
  return to_little(w);
}

float load_float(const char* p) { return std::bit_cast<float>(load_word(p)); }

void store_word(std::ostream& out, std::uint32_t w) {
  w = to_little(w);
  out.write(reinterpret_cast<const char*>(&w), 4);
}

constexpr const char* kSemanticKittiJson = R"({
  "num_classes": 19,
  "ignore": {"train_id": 0, "name": "unlabeled", "raw_ids": [0, 1, 52, 99], "canonical_raw": 0},
  "classes": [
    {"train_id": 1,  "name": "car",           "thing": true,  "raw_ids": [10, 252], "canonical_raw": 10},
    {"train_id": 2,  "name": "bicycle",       "thing": true,  "raw_ids": [11], "canonical_raw": 11},
    {"train_id": 3,  "name": "motorcycle",    "thing": true,  "raw_ids": [15], "canonical_raw": 15},
    {"train_id": 4,  "name": "truck",         "thing": true,  "raw_ids": [18, 258], "canonical_raw": 18},
    {"train_id": 5,  "name": "other-vehicle", "thing": true,  "raw_ids": [13, 16, 20, 256, 257, 259], "canonical_raw": 20},
    {"train_id": 6,  "name": "person",        "thing": true,  "raw_ids": [30, 254], "canonical_raw": 30},
    {"train_id": 7,  "name": "bicyclist",     "thing": true,  "raw_ids": [31, 253], "canonical_raw": 31},
    {"train_id": 8,  "name": "motorcyclist",  "thing": true,  "raw_ids": [32, 255], "canonical_raw": 32},
    {"train_id": 9,  "name": "road",          "thing": false, "raw_ids": [40, 60], "canonical_raw": 40},
    {"train_id": 10, "name": "parking",       "thing": false, "raw_ids": [44], "canonical_raw": 44},
    {"train_id": 11, "name": "sidewalk",      "thing": false, "raw_ids": [48], "canonical_raw": 48},
    {"train_id": 12, "name": "other-ground",  "thing": false, "raw_ids": [49], "canonical_raw": 49},
    {"train_id": 13, "name": "building",      "thing": false, "raw_ids": [50], "canonical_raw": 50},
    {"train_id": 14, "name": "fence",         "thing": false, "raw_ids": [51], "canonical_raw": 51},
    {"train_id": 15, "name": "vegetation",    "thing": false, "raw_ids": [70], "canonical_raw": 70},
    {"train_id": 16, "name": "trunk",         "thing": false, "raw_ids": [71], "canonical_raw": 71},
    {"train_id": 17, "name": "terrain",       "thing": false, "raw_ids": [72], "canonical_raw": 72},
    {"train_id": 18, "name": "pole",          "thing": false, "raw_ids": [80], "canonical_raw": 80},
    {"train_id": 19, "name": "traffic-sign",  "thing": false, "raw_ids": [81], "canonical_raw": 81}
  ]
})";

}  // namespace

int ClassConfig::to_train(std::uint32_t raw) const {
  auto it = raw_to_train.find(raw);
  return it == raw_to_train.end() ? ignore_id : it->second;
}

std::uint32_t ClassConfig::to_raw(int train_id) const {
  if (train_id < 0 || train_id > num_classes) {
    fail(ErrorKind::kConfig, "train id " + std::to_string(train_id) +
                                 " has no raw id (num_classes = " +
                                 std::to_string(num_classes) + ")");
  }
  return train_to_raw[static_cast<std::size_t>(train_id)];
}

void ClassConfig::validate() const {
  if (num_classes < 1) fail(ErrorKind::kConfig, "num_classes must be positive");
  if (ignore_id != 0) fail(ErrorKind::kConfig, "ignore train id must be 0");
  const auto n = static_cast<std::size_t>(num_classes) + 1;
  if (train_to_raw.size() != n || names.size() != n || is_thing.size() != n) {
    fail(ErrorKind::kConfig, "per-class tables must have num_classes + 1 entries");
  }
  for (const auto& [raw, train] : raw_to_train) {
    if (train < 0 || train > num_classes) {
      fail(ErrorKind::kConfig, "raw id " + std::to_string(raw) +
                                   " maps outside 0..num_classes");
    }
  }
  for (int t = 0; t <= num_classes; ++t) {
    if (to_train(to_raw(t)) != t) {
      fail(ErrorKind::kConfig, "inverse entry for train id " + std::to_string(t) +
                                   " does not map back to it");
    }
  }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() % 16 != 0) {
    fail(ErrorKind::kMalformed, "scan " + path.string() + " has " +
                                    std::to_string(bytes.size()) +
                                    " bytes, not a multiple of 16");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = bytes.data() + 16 * i;
    Point& pt = cloud.points[i];
    pt.x = load_float(p);
    pt.y = load_float(p + 4);
    pt.z = load_float(p + 8);
    pt.rem = load_float(p + 12);
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z) ||
        !std::isfinite(pt.rem)) {
      fail(ErrorKind::kCorrupt, "scan " + path.string() + ": non-finite value at point " +
                                    std::to_string(i));
    }
  }
  return cloud;
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kDataset, "cannot write " + path.string());
  for (const Point& p : cloud.points) {
    for (float f : {p.x, p.y, p.z, p.rem}) store_word(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) fail(ErrorKind::kDataset, "write failed for " + path.string());
}

LabelArrays read_labels(const std::filesystem::path& path, const ClassConfig& cfg) {
  const auto bytes = slurp(path);
  if (bytes.size() % 4 != 0) {
    fail(ErrorKind::kMalformed, "label file " + path.string() + " has " +
                                    std::to_string(bytes.size()) +
                                    " bytes, not a multiple of 4");
  }
  const std::size_t n = bytes.size() / 4;
  LabelArrays out;
  out.semantic.resize(n);
  out.instance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t word = load_word(bytes.data() + 4 * i);
    out.semantic[i] = cfg.to_train(word & 0xFFFFu);
    out.instance[i] = word >> 16;
  }
  return out;
}

void attach_labels(PointCloud& cloud, LabelArrays labels) {
  if (labels.semantic.size() != cloud.size() || labels.instance.size() != cloud.size()) {
    fail(ErrorKind::kMalformed, "label count " + std::to_string(labels.semantic.size()) +
                                    " does not match point count " +
                                    std::to_string(cloud.size()));
  }
  cloud.semantic = std::move(labels.semantic);
  cloud.instance = std::move(labels.instance);
}

void write_labels(const std::filesystem::path& path, const PanopticResult& result,
                  const ClassConfig& cfg) {
  if (result.instance.size() != result.semantic.size()) {
    fail(ErrorKind::kShape, "semantic and instance arrays differ in length");
  }
  std::vector<std::uint32_t> words(result.size());
  for (std::size_t i = 0; i < result.size(); ++i) {
    const std::uint32_t raw = cfg.to_raw(result.semantic[i]);
    if (raw > 0xFFFFu || result.instance[i] > 0xFFFFu) {
      fail(ErrorKind::kConfig, "label word overflow at point " + std::to_string(i));
    }
    words[i] = (result.instance[i] << 16) | raw;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kDataset, "cannot write " + path.string());
  for (std::uint32_t w : words) store_word(out, w);
  if (!out) fail(ErrorKind::kDataset, "write failed for " + path.string());
}

ClassConfig parse_class_config(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("class config is not valid JSON: ") + e.what());
  }

  ClassConfig cfg;
  try {
    cfg.num_classes = doc.at("num_classes").get<int>();
    if (cfg.num_classes < 1) fail(ErrorKind::kConfig, "num_classes must be positive");
    const auto n = static_cast<std::size_t>(cfg.num_classes) + 1;
    cfg.train_to_raw.assign(n, 0);
    cfg.names.assign(n, "");
    cfg.is_thing.assign(n, false);

    std::vector<bool> seen(n, false);
    auto add_entry = [&](const json& entry, bool is_ignore) {
      const int id = entry.at("train_id").get<int>();
      if (id < 0 || id > cfg.num_classes) {
        fail(ErrorKind::kConfig, "train id " + std::to_string(id) + " out of range");
      }
      if (seen[static_cast<std::size_t>(id)]) {
        fail(ErrorKind::kConfig, "duplicate train id " + std::to_string(id));
      }
      seen[static_cast<std::size_t>(id)] = true;
      cfg.names[static_cast<std::size_t>(id)] = entry.value("name", std::string{});
      if (!is_ignore) {
        if (!entry.contains("thing")) {
          fail(ErrorKind::kConfig, "is_thing undefined for train id " + std::to_string(id));
        }
        cfg.is_thing[static_cast<std::size_t>(id)] = entry.at("thing").get<bool>();
      }
      std::set<std::uint32_t> raws;
      for (const auto& r : entry.at("raw_ids")) {
        const auto raw = r.get<std::uint32_t>();
        if (!cfg.raw_to_train.emplace(raw, id).second) {
          fail(ErrorKind::kConfig, "raw id " + std::to_string(raw) + " listed twice");
        }
        raws.insert(raw);
      }
      if (!entry.contains("canonical_raw")) {
        fail(ErrorKind::kConfig, "missing inverse entry for train id " + std::to_string(id));
      }
      const auto canonical = entry.at("canonical_raw").get<std::uint32_t>();
      if (!raws.contains(canonical)) {
        fail(ErrorKind::kConfig, "canonical raw id " + std::to_string(canonical) +
                                     " of train id " + std::to_string(id) +
                                     " is not among its raw ids");
      }
      cfg.train_to_raw[static_cast<std::size_t>(id)] = canonical;
    };

    const json& ignore = doc.at("ignore");
    cfg.ignore_id = ignore.at("train_id").get<int>();
    if (cfg.ignore_id != 0) fail(ErrorKind::kConfig, "ignore train id must be 0");
    add_entry(ignore, true);
    for (const auto& entry : doc.at("classes")) add_entry(entry, false);

    for (std::size_t id = 1; id < n; ++id) {
      if (!seen[id]) {
        fail(ErrorKind::kConfig, "train id " + std::to_string(id) + " is not defined");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("class config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ClassConfig load_class_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open class config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_class_config(ss.str());
}

ClassConfig semantic_kitti_config() { return parse_class_config(kSemanticKittiJson); }

}  // namespace rangeseg
