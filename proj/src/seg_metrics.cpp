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

#include "rangeseg/seg_metrics.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "rangeseg/error.hpp"

namespace rangeseg {
namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "    -  ";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%7.4f", *v);
  return buf;
}

using SegmentKey = std::uint64_t;

SegmentKey segment_key(int cls, std::uint32_t instance, const ClassConfig& cfg) {
  const std::uint32_t id = cfg.is_thing[static_cast<std::size_t>(cls)] ? instance : 0;
  return (static_cast<std::uint64_t>(cls) << 32) | id;
}

int key_class(SegmentKey k) { return static_cast<int>(k >> 32); }

void check_ids(std::span<const int> ids, int num_classes, const char* what) {
  for (int c : ids) {
    if (c < 0 || c > num_classes) {
      fail(ErrorKind::kShape, std::string(what) + " class id " + std::to_string(c) +
                                  " outside 0.." + std::to_string(num_classes));
    }
  }
}

}  // namespace

ConfusionAccumulator::ConfusionAccumulator(int k, int ignore)
    : num_classes(k),
      ignore_id(ignore),
      matrix(static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(k + 1), 0) {}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.matrix.size() != matrix.size()) {
    fail(ErrorKind::kShape, "cannot merge confusion matrices of different sizes");
  }
  for (std::size_t i = 0; i < matrix.size(); ++i) matrix[i] += other.matrix[i];
}

void accumulate_semantic(ConfusionAccumulator& acc, std::span<const int> pred,
                         std::span<const int> gt) {
  if (pred.size() != gt.size()) {
    fail(ErrorKind::kShape, "prediction has " + std::to_string(pred.size()) +
                                " points, ground truth " + std::to_string(gt.size()));
  }
  check_ids(pred, acc.num_classes, "predicted");
  check_ids(gt, acc.num_classes, "ground-truth");
  const auto stride = static_cast<std::size_t>(acc.num_classes + 1);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == acc.ignore_id) continue;
    ++acc.matrix[static_cast<std::size_t>(gt[i]) * stride + static_cast<std::size_t>(pred[i])];
  }
}

MiouResult miou(const ConfusionAccumulator& acc) {
  MiouResult out;
  out.iou.assign(static_cast<std::size_t>(acc.num_classes) + 1, std::nullopt);
  std::vector<double> scored;
  for (int c = 0; c <= acc.num_classes; ++c) {
    if (c == acc.ignore_id) continue;
    const double tp = static_cast<double>(acc.at(c, c));
    double fp = 0.0, fn = 0.0;
    for (int o = 0; o <= acc.num_classes; ++o) {
      if (o == c || o == acc.ignore_id) continue;
      fp += static_cast<double>(acc.at(o, c));
      fn += static_cast<double>(acc.at(c, o));
    }
    const double denom = tp + fp + fn;
    if (denom <= 0.0) continue;
    out.iou[static_cast<std::size_t>(c)] = tp / denom;
    scored.push_back(tp / denom);
  }
  out.mean = mean_of(scored);
  return out;
}

PanopticAccumulator::PanopticAccumulator(int num_classes)
    : classes(static_cast<std::size_t>(num_classes) + 1) {}

void PanopticAccumulator::merge(const PanopticAccumulator& other) {
  if (classes.empty()) {
    *this = other;
    return;
  }
  if (other.classes.size() != classes.size()) {
    fail(ErrorKind::kShape, "cannot merge panoptic accumulators of different sizes");
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    classes[c].tp += other.classes[c].tp;
    classes[c].fp += other.classes[c].fp;
    classes[c].fn += other.classes[c].fn;
    classes[c].iou_sum += other.classes[c].iou_sum;
    classes[c].sem_intersection += other.classes[c].sem_intersection;
    classes[c].sem_union += other.classes[c].sem_union;
  }
}

void accumulate_panoptic(PanopticAccumulator& acc, const PanopticResult& pred,
                         const PanopticResult& gt, const ClassConfig& cfg) {
  if (acc.classes.empty()) acc = PanopticAccumulator(cfg.num_classes);
  if (pred.size() != gt.size() || pred.instance.size() != pred.size() ||
      gt.instance.size() != gt.size()) {
    fail(ErrorKind::kShape, "prediction and ground truth differ in length");
  }
  check_ids(pred.semantic, cfg.num_classes, "predicted");
  check_ids(gt.semantic, cfg.num_classes, "ground-truth");
  const int ignore = cfg.ignore_id;

  std::map<SegmentKey, std::uint64_t> gt_area, pred_area, pred_void;
  std::map<std::pair<SegmentKey, SegmentKey>, std::uint64_t> inter;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.semantic[i];
    const int p = pred.semantic[i];
    const bool gt_void = g == ignore;
    if (!gt_void) {
      auto& gc = acc.classes[static_cast<std::size_t>(g)];
      ++gc.sem_union;
      if (p == g) {
        ++gc.sem_intersection;
      } else if (p != ignore) {
        ++acc.classes[static_cast<std::size_t>(p)].sem_union;
      }
    }
    SegmentKey gk = 0;
    if (!gt_void) {
      gk = segment_key(g, gt.instance[i], cfg);
      ++gt_area[gk];
    }
    if (p == ignore) continue;
    const SegmentKey pk = segment_key(p, pred.instance[i], cfg);
    ++pred_area[pk];
    if (gt_void) {
      ++pred_void[pk];
    } else if (p == g) {
      ++inter[{pk, gk}];
    }
  }

  std::map<SegmentKey, bool> gt_matched, pred_matched;
  for (const auto& [pair, count] : inter) {
    const auto& [pk, gk] = pair;
    const double i = static_cast<double>(count);
    const double u = static_cast<double>(pred_area[pk] - pred_void[pk]) +
                     static_cast<double>(gt_area[gk]) - i;
    const double iou = i / u;
    if (iou <= 0.5) continue;
    if (gt_matched[gk] || pred_matched[pk]) {
      fail(ErrorKind::kState, "segment matched twice despite IoU > 0.5");
    }
    gt_matched[gk] = pred_matched[pk] = true;
    auto& c = acc.classes[static_cast<std::size_t>(key_class(gk))];
    ++c.tp;
    c.iou_sum += iou;
  }
  for (const auto& [gk, area] : gt_area) {
    if (!gt_matched[gk]) ++acc.classes[static_cast<std::size_t>(key_class(gk))].fn;
  }
  for (const auto& [pk, area] : pred_area) {
    if (pred_matched[pk]) continue;
    if (static_cast<double>(pred_void[pk]) / static_cast<double>(area) > 0.5) continue;
    ++acc.classes[static_cast<std::size_t>(key_class(pk))].fp;
  }
}

PanopticReport panoptic_report(const PanopticAccumulator& acc, const ClassConfig& cfg) {
  PanopticReport r;
  r.classes.resize(static_cast<std::size_t>(cfg.num_classes) + 1);
  std::vector<double> pq, rq, sq, pq_th, rq_th, sq_th, pq_st, rq_st, sq_st, dagger, ious;
  for (int c = 1; c <= cfg.num_classes && static_cast<std::size_t>(c) < acc.classes.size(); ++c) {
    const auto& k = acc.classes[static_cast<std::size_t>(c)];
    PanopticClassScore& s = r.classes[static_cast<std::size_t>(c)];
    s.train_id = c;
    if (k.sem_union > 0) {
      s.semantic_iou =
          static_cast<double>(k.sem_intersection) / static_cast<double>(k.sem_union);
      ious.push_back(*s.semantic_iou);
    }
    const double denom = static_cast<double>(k.tp) + 0.5 * static_cast<double>(k.fp) +
                         0.5 * static_cast<double>(k.fn);
    if (denom <= 0.0) continue;
    s.present = true;
    s.pq = k.iou_sum / denom;
    s.rq = static_cast<double>(k.tp) / denom;
    s.sq = k.tp > 0 ? k.iou_sum / static_cast<double>(k.tp) : 0.0;
    pq.push_back(s.pq);
    rq.push_back(s.rq);
    sq.push_back(s.sq);
    const bool thing = cfg.is_thing[static_cast<std::size_t>(c)];
    (thing ? pq_th : pq_st).push_back(s.pq);
    (thing ? rq_th : rq_st).push_back(s.rq);
    (thing ? sq_th : sq_st).push_back(s.sq);
    dagger.push_back(thing ? s.pq : s.semantic_iou.value_or(0.0));
  }
  r.pq = mean_of(pq);
  r.rq = mean_of(rq);
  r.sq = mean_of(sq);
  r.pq_th = mean_of(pq_th);
  r.rq_th = mean_of(rq_th);
  r.sq_th = mean_of(sq_th);
  r.pq_st = mean_of(pq_st);
  r.rq_st = mean_of(rq_st);
  r.sq_st = mean_of(sq_st);
  r.pq_dagger = mean_of(dagger);
  r.miou = mean_of(ious);
  return r;
}

std::string semantic_report_json(const MiouResult& result, const ClassConfig& cfg) {
  nlohmann::json doc;
  doc["metric"] = "miou";
  doc["miou"] = opt(result.mean);
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 1; c <= cfg.num_classes; ++c) {
    classes.push_back({{"train_id", c},
                       {"name", cfg.names[static_cast<std::size_t>(c)]},
                       {"iou", opt(result.iou[static_cast<std::size_t>(c)])}});
  }
  doc["classes"] = std::move(classes);
  return doc.dump(2) + "\n";
}

std::string semantic_report_table(const MiouResult& result, const ClassConfig& cfg) {
  std::ostringstream os;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-15s %7s\n", "class", "IoU");
  os << buf;
  for (int c = 1; c <= cfg.num_classes; ++c) {
    std::snprintf(buf, sizeof buf, "%-15s %s\n", cfg.names[static_cast<std::size_t>(c)].c_str(),
                  fmt_opt(result.iou[static_cast<std::size_t>(c)]).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-15s %s\n", "mIoU", fmt_opt(result.mean).c_str());
  os << buf;
  return os.str();
}

std::string panoptic_report_json(const PanopticReport& report, const ClassConfig& cfg) {
  nlohmann::json doc;
  doc["metric"] = "panoptic";
  doc["pq"] = opt(report.pq);
  doc["rq"] = opt(report.rq);
  doc["sq"] = opt(report.sq);
  doc["pq_th"] = opt(report.pq_th);
  doc["rq_th"] = opt(report.rq_th);
  doc["sq_th"] = opt(report.sq_th);
  doc["pq_st"] = opt(report.pq_st);
  doc["rq_st"] = opt(report.rq_st);
  doc["sq_st"] = opt(report.sq_st);
  doc["pq_dagger"] = opt(report.pq_dagger);
  doc["miou"] = opt(report.miou);
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 1; c <= cfg.num_classes; ++c) {
    const auto& s = report.classes[static_cast<std::size_t>(c)];
    classes.push_back({{"train_id", c},
                       {"name", cfg.names[static_cast<std::size_t>(c)]},
                       {"thing", static_cast<bool>(cfg.is_thing[static_cast<std::size_t>(c)])},
                       {"pq", s.present ? nlohmann::json(s.pq) : nlohmann::json(nullptr)},
                       {"rq", s.present ? nlohmann::json(s.rq) : nlohmann::json(nullptr)},
                       {"sq", s.present ? nlohmann::json(s.sq) : nlohmann::json(nullptr)},
                       {"iou", opt(s.semantic_iou)}});
  }
  doc["classes"] = std::move(classes);
  return doc.dump(2) + "\n";
}

std::string panoptic_report_table(const PanopticReport& report, const ClassConfig& cfg) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-15s %7s %7s %7s %7s\n", "class", "PQ", "RQ", "SQ", "IoU");
  os << buf;
  for (int c = 1; c <= cfg.num_classes; ++c) {
    const auto& s = report.classes[static_cast<std::size_t>(c)];
    auto v = [&](double x) { return s.present ? std::optional<double>(x) : std::nullopt; };
    std::snprintf(buf, sizeof buf, "%-15s %s %s %s %s\n",
                  cfg.names[static_cast<std::size_t>(c)].c_str(), fmt_opt(v(s.pq)).c_str(),
                  fmt_opt(v(s.rq)).c_str(), fmt_opt(v(s.sq)).c_str(),
                  fmt_opt(s.semantic_iou).c_str());
    os << buf;
  }
  const std::pair<const char*, std::array<std::optional<double>, 3>> rows[] = {
      {"all", {report.pq, report.rq, report.sq}},
      {"things", {report.pq_th, report.rq_th, report.sq_th}},
      {"stuff", {report.pq_st, report.rq_st, report.sq_st}}};
  for (const auto& [name, vals] : rows) {
    std::snprintf(buf, sizeof buf, "%-15s %s %s %s\n", name, fmt_opt(vals[0]).c_str(),
                  fmt_opt(vals[1]).c_str(), fmt_opt(vals[2]).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-15s %s\n%-15s %s\n", "PQ-dagger",
                fmt_opt(report.pq_dagger).c_str(), "mIoU", fmt_opt(report.miou).c_str());
  os << buf;
  return os.str();
}

}  // namespace rangeseg
