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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rangeseg/error.hpp"
#include "rangeseg/pipeline.hpp"

namespace rangeseg {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) fail(ErrorKind::kConfig, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) fail(ErrorKind::kConfig, "unknown key " + where + "." + key);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

void PipelineConfig::validate() const {
  classes.validate();
  geometry.validate();
  augment.validate();
  loss.validate();
  knn.validate();
  if (!(eps > 0.0)) fail(ErrorKind::kConfig, "stats eps must be positive");
  if (temporal_past < 0 || temporal_future < 0) {
    fail(ErrorKind::kConfig, "temporal window sizes must be non-negative");
  }
  if (!(thresholds.object >= 0.0 && thresholds.object <= 1.0) ||
      !(thresholds.overlap >= 0.0 && thresholds.overlap <= 1.0)) {
    fail(ErrorKind::kConfig, "panoptic thresholds must lie in [0, 1]");
  }
  if (workers < 1) fail(ErrorKind::kConfig, "workers must be at least 1");
}

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base) {
  PipelineConfig c;
  try {
    const json doc = json::parse(text);
    check_keys(doc, "config",
               {"dataset_root", "splits", "class_config", "geometry", "augment", "loss", "stats",
                "knn", "temporal", "panoptic", "task", "output_dir", "seed", "workers"});
    if (doc.contains("dataset_root")) {
      c.dataset_root = resolve(base, doc.at("dataset_root").get<std::string>());
    }
    read(doc, "splits", c.splits);
    if (doc.contains("class_config")) {
      const auto path = resolve(base, doc.at("class_config").get<std::string>());
      if (!std::filesystem::exists(path)) {
        fail(ErrorKind::kConfig, "class config " + path.string() + " does not exist");
      }
      c.classes = load_class_config(path);
    }
    if (doc.contains("geometry")) {
      const json& g = doc.at("geometry");
      check_keys(g, "geometry", {"width", "height", "fov_up_deg", "fov_down_deg"});
      c.geometry = SensorGeometry::from_degrees(g.value("width", 2048), g.value("height", 64),
                                                g.value("fov_up_deg", 3.0),
                                                g.value("fov_down_deg", 25.0));
    }
    if (doc.contains("augment")) {
      const json& a = doc.at("augment");
      check_keys(a, "augment",
                 {"p_flip", "rot_range_deg", "trans_range", "p_point_drop", "threshold",
                  "drop_granularity", "mode"});
      read(a, "p_flip", c.augment.p_flip);
      if (a.contains("rot_range_deg")) {
        c.augment.rot_range = a.at("rot_range_deg").get<double>() * std::numbers::pi / 180.0;
      }
      read(a, "trans_range", c.augment.trans_range);
      read(a, "p_point_drop", c.augment.p_point_drop);
      read(a, "threshold", c.augment.t);
      const std::string gran = a.value("drop_granularity", "class");
      if (gran == "class") {
        c.augment.drop_granularity = DropGranularity::kClass;
      } else if (gran == "point") {
        c.augment.drop_granularity = DropGranularity::kPoint;
      } else {
        fail(ErrorKind::kConfig, "drop_granularity must be class or point");
      }
      const std::string mode = a.value("mode", "paste_drop");
      if (mode == "paste_drop") {
        c.augment.mode = WpdMode::kPasteDrop;
      } else if (mode == "paste") {
        c.augment.mode = WpdMode::kPasteOnly;
      } else if (mode == "drop") {
        c.augment.mode = WpdMode::kDropOnly;
      } else {
        fail(ErrorKind::kConfig, "augment mode must be paste_drop, paste or drop");
      }
    }
    if (doc.contains("loss")) {
      const json& l = doc.at("loss");
      check_keys(l, "loss",
                 {"cls", "focal", "lovasz", "boundary", "gamma", "no_object_weight",
                  "boundary_theta", "balance"});
      read(l, "cls", c.loss.cls);
      read(l, "focal", c.loss.focal);
      read(l, "lovasz", c.loss.lovasz);
      read(l, "boundary", c.loss.boundary);
      read(l, "gamma", c.loss.gamma);
      read(l, "no_object_weight", c.loss.no_object_weight);
      read(l, "boundary_theta", c.loss.boundary_theta);
      if (l.contains("balance")) c.loss.strategy = parse_balance_strategy(l.at("balance").get<std::string>());
    }
    if (doc.contains("stats")) {
      const json& s = doc.at("stats");
      check_keys(s, "stats", {"file", "eps"});
      if (s.contains("file")) c.stats_file = resolve(base, s.at("file").get<std::string>());
      read(s, "eps", c.eps);
    }
    if (doc.contains("knn")) {
      const json& k = doc.at("knn");
      check_keys(k, "knn", {"enabled", "k", "window", "sigma", "cutoff"});
      read(k, "enabled", c.knn_enabled);
      read(k, "k", c.knn.k);
      read(k, "window", c.knn.window);
      read(k, "sigma", c.knn.sigma);
      read(k, "cutoff", c.knn.cutoff);
    }
    if (doc.contains("temporal")) {
      const json& t = doc.at("temporal");
      check_keys(t, "temporal", {"past", "future", "space"});
      read(t, "past", c.temporal_past);
      read(t, "future", c.temporal_future);
      const std::string space = t.value("space", "logits");
      if (space == "logits") {
        c.temporal_space = TemporalSpace::kLogits;
      } else if (space == "probabilities") {
        c.temporal_space = TemporalSpace::kProbabilities;
      } else {
        fail(ErrorKind::kConfig, "temporal space must be logits or probabilities");
      }
    }
    if (doc.contains("panoptic")) {
      const json& p = doc.at("panoptic");
      check_keys(p, "panoptic", {"object_threshold", "overlap_threshold"});
      read(p, "object_threshold", c.thresholds.object);
      read(p, "overlap_threshold", c.thresholds.overlap);
    }
    if (doc.contains("task")) c.task = parse_task(doc.at("task").get<std::string>());
    if (doc.contains("output_dir")) {
      c.output_dir = resolve(base, doc.at("output_dir").get<std::string>());
    }
    read(doc, "seed", c.seed);
    read(doc, "workers", c.workers);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config document: ") + e.what());
  }
  c.augment.seed = c.seed;
  c.augment.task = c.task;
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), path.parent_path());
}

void apply_environment(PipelineConfig& config) {
  if (const char* root = std::getenv(kDatasetRootEnv); root != nullptr && *root != '\0') {
    config.dataset_root = root;
  }
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace rangeseg
