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

#include "rangeseg/class_stats.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "rangeseg/error.hpp"

namespace rangeseg {

Task parse_task(const std::string& name) {
  if (name == "semantic" || name == "sem") return Task::kSemantic;
  if (name == "panoptic" || name == "pan") return Task::kPanoptic;
  fail(ErrorKind::kConfig, "unknown task '" + name + "' (expected semantic or panoptic)");
}

const char* to_string(Task task) {
  return task == Task::kSemantic ? "semantic" : "panoptic";
}

StatsAccumulator::StatsAccumulator(int num_classes)
    : points(static_cast<std::size_t>(num_classes) + 1, 0),
      sem(points.size(), 0),
      ins(points.size(), 0) {}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (points.empty()) {
    *this = other;
    return;
  }
  if (other.points.size() != points.size()) {
    fail(ErrorKind::kShape, "cannot merge accumulators with different class counts");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i] += other.points[i];
    sem[i] += other.sem[i];
    ins[i] += other.ins[i];
  }
  total_points += other.total_points;
  frames += other.frames;
}

void accumulate_frame(StatsAccumulator& acc, const PointCloud& cloud, const ClassConfig& cfg) {
  if (acc.points.empty()) acc = StatsAccumulator(cfg.num_classes);
  if (acc.num_classes() != cfg.num_classes) {
    fail(ErrorKind::kShape, "accumulator class count does not match config");
  }
  if (!cloud.labeled()) fail(ErrorKind::kDataset, "statistics need a labeled cloud");

  std::vector<bool> present(acc.points.size(), false);
  // Every distinct (class, instance id) pair of a thing class is one instance;
  // thing points without an instance id form one more segment.
  std::set<std::pair<int, std::uint32_t>> instances;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int c = cloud.semantic[i];
    if (c == cfg.ignore_id || c < 0 || c > cfg.num_classes) continue;
    ++acc.points[static_cast<std::size_t>(c)];
    ++acc.total_points;
    present[static_cast<std::size_t>(c)] = true;
    if (cfg.is_thing[static_cast<std::size_t>(c)]) instances.emplace(c, cloud.instance[i]);
  }
  for (std::size_t c = 1; c < present.size(); ++c) {
    if (!present[c]) continue;
    ++acc.sem[c];
    if (!cfg.is_thing[c]) ++acc.ins[c];
  }
  for (const auto& [c, id] : instances) ++acc.ins[static_cast<std::size_t>(c)];
  ++acc.frames;
}

ClassStats stats_from_frequencies(const std::vector<double>& f, const std::vector<double>& sem,
                                  const std::vector<double>& ins, double eps,
                                  const ClassConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.num_classes) + 1;
  if (f.size() != n || sem.size() != n || ins.size() != n) {
    fail(ErrorKind::kShape, "statistics vectors must have num_classes + 1 entries");
  }
  if (!(eps > 0.0)) fail(ErrorKind::kConfig, "eps must be positive");

  ClassStats s;
  s.num_classes = cfg.num_classes;
  s.eps = eps;
  s.f = f;
  s.sem = sem;
  s.ins = ins;
  s.is_thing = cfg.is_thing;
  s.names = cfg.names;
  s.alpha.assign(n, 0.0);
  s.beta.assign(n, 1.0);
  s.w_sem.assign(n, 0.0);
  s.w_pan.assign(n, 0.0);

  double max_alpha = 0.0;
  double max_alpha_beta = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    s.alpha[i] = 1.0 / (f[i] + eps);
    if (cfg.is_thing[i] && sem[i] > 0.0) s.beta[i] = ins[i] / sem[i];
    max_alpha = std::max(max_alpha, s.alpha[i]);
    max_alpha_beta = std::max(max_alpha_beta, s.alpha[i] * s.beta[i]);
  }
  for (std::size_t i = 1; i < n; ++i) {
    s.w_sem[i] = s.alpha[i] / max_alpha;
    s.w_pan[i] = s.alpha[i] * s.beta[i] / max_alpha_beta;
  }
  return s;
}

ClassStats finalize(const StatsAccumulator& acc, double eps, const ClassConfig& cfg) {
  if (acc.total_points == 0) fail(ErrorKind::kDataset, "no labeled points: empty dataset");
  if (acc.num_classes() != cfg.num_classes) {
    fail(ErrorKind::kShape, "accumulator class count does not match config");
  }
  const auto n = acc.points.size();
  std::vector<double> f(n, 0.0), sem(n, 0.0), ins(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    f[i] = static_cast<double>(acc.points[i]) / static_cast<double>(acc.total_points);
    sem[i] = static_cast<double>(acc.sem[i]);
    ins[i] = static_cast<double>(acc.ins[i]);
  }
  return stats_from_frequencies(f, sem, ins, eps, cfg);
}

std::vector<bool> long_tail_split(const ClassStats& stats, double t, Task task) {
  const auto& w = stats.weights(task);
  std::vector<bool> flags(w.size(), false);
  for (std::size_t i = 1; i < w.size(); ++i) flags[i] = w[i] > t;
  return flags;
}

std::string stats_to_json(const ClassStats& stats, const StatsAccumulator* counts) {
  using nlohmann::json;
  json doc;
  doc["num_classes"] = stats.num_classes;
  doc["eps"] = stats.eps;
  json classes = json::array();
  for (int i = 1; i <= stats.num_classes; ++i) {
    const auto k = static_cast<std::size_t>(i);
    classes.push_back({{"train_id", i},
                       {"name", stats.names[k]},
                       {"thing", static_cast<bool>(stats.is_thing[k])},
                       {"f", stats.f[k]},
                       {"sem", stats.sem[k]},
                       {"ins", stats.ins[k]},
                       {"alpha", stats.alpha[k]},
                       {"beta", stats.beta[k]},
                       {"w_sem", stats.w_sem[k]},
                       {"w_pan", stats.w_pan[k]}});
  }
  doc["classes"] = std::move(classes);
  if (counts != nullptr) {
    doc["counts"] = {{"total_points", counts->total_points},
                     {"frames", counts->frames},
                     {"points", counts->points},
                     {"sem", counts->sem},
                     {"ins", counts->ins}};
  }
  return doc.dump(2) + "\n";
}

ClassStats stats_from_json(const std::string& text, const ClassConfig& cfg,
                           StatsAccumulator* counts) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("num_classes").get<int>() != cfg.num_classes) {
      fail(ErrorKind::kConfig, "stats document class count does not match class config");
    }
    const auto n = static_cast<std::size_t>(cfg.num_classes) + 1;
    std::vector<double> f(n, 0.0), sem(n, 0.0), ins(n, 0.0);
    for (const auto& c : doc.at("classes")) {
      const int id = c.at("train_id").get<int>();
      if (id < 1 || id > cfg.num_classes) fail(ErrorKind::kConfig, "bad train id in stats");
      f[static_cast<std::size_t>(id)] = c.at("f").get<double>();
      sem[static_cast<std::size_t>(id)] = c.at("sem").get<double>();
      ins[static_cast<std::size_t>(id)] = c.at("ins").get<double>();
    }
    if (counts != nullptr && doc.contains("counts")) {
      const json& cj = doc.at("counts");
      counts->total_points = cj.at("total_points").get<std::uint64_t>();
      counts->frames = cj.at("frames").get<std::uint64_t>();
      counts->points = cj.at("points").get<std::vector<std::uint64_t>>();
      counts->sem = cj.at("sem").get<std::vector<std::uint64_t>>();
      counts->ins = cj.at("ins").get<std::vector<std::uint64_t>>();
      if (counts->points.size() != n || counts->sem.size() != n || counts->ins.size() != n) {
        fail(ErrorKind::kConfig, "stats counts have the wrong length");
      }
    }
    return stats_from_frequencies(f, sem, ins, doc.value("eps", kDefaultEps), cfg);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("stats document: ") + e.what());
  }
}

void save_stats(const std::filesystem::path& path, const ClassStats& stats,
                const StatsAccumulator* counts) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kDataset, "cannot write " + path.string());
  out << stats_to_json(stats, counts);
}

ClassStats load_stats(const std::filesystem::path& path, const ClassConfig& cfg,
                      StatsAccumulator* counts) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot open stats document " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return stats_from_json(ss.str(), cfg, counts);
}

std::string format_stats_table(const ClassStats& stats) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-15s %10s %9s %8s %10s %8s %10s %7s %7s\n", "class", "f",
                "alpha", "sem", "ins", "beta", "alpha*beta", "w_s", "w_p");
  os << buf;
  for (int i = 1; i <= stats.num_classes; ++i) {
    const auto k = static_cast<std::size_t>(i);
    std::snprintf(buf, sizeof buf, "%-15s %10.3e %9.2f %8.0f %10.0f %8.2f %10.2f %7.2f %7.2f\n",
                  stats.names[k].c_str(), stats.f[k], stats.alpha[k], stats.sem[k],
                  stats.ins[k], stats.beta[k], stats.alpha[k] * stats.beta[k], stats.w_sem[k],
                  stats.w_pan[k]);
    os << buf;
  }
  return os.str();
}

}  // namespace rangeseg
