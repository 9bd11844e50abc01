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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "rangeseg/error.hpp"
#include "rangeseg/pipeline.hpp"
#include "rangeseg/rng.hpp"

namespace fs = std::filesystem;

namespace rangeseg {
namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

PointCloud read_labeled(const LabeledFrame& frame, const ClassConfig& cfg) {
  PointCloud cloud = read_point_cloud(frame.scan);
  attach_labels(cloud, read_labels(frame.labels, cfg));
  return cloud;
}

// Keeps the instance id only where cleaning left the class unchanged.
PanopticResult with_instances(std::vector<int> cleaned, const std::vector<int>& before,
                              const std::vector<int>& instances) {
  PanopticResult r;
  r.instance.resize(cleaned.size());
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    r.instance[i] = cleaned[i] == before[i] ? static_cast<std::uint32_t>(instances[i]) : 0;
  }
  r.semantic = std::move(cleaned);
  return r;
}

std::array<unsigned char, 3> class_color(int train_id) {
  static constexpr unsigned char kPalette[][3] = {
      {0, 0, 0},       {100, 150, 245}, {100, 230, 245}, {30, 60, 150},  {80, 30, 180},
      {0, 0, 255},     {255, 30, 30},   {255, 40, 200},  {150, 30, 90},  {255, 0, 255},
      {255, 150, 255}, {75, 0, 75},     {175, 0, 75},    {255, 200, 0},  {255, 120, 50},
      {0, 175, 0},     {135, 60, 0},    {150, 240, 80},  {255, 240, 150}, {255, 0, 0}};
  constexpr int n = static_cast<int>(std::size(kPalette));
  if (train_id >= 0 && train_id < n) {
    return {kPalette[train_id][0], kPalette[train_id][1], kPalette[train_id][2]};
  }
  const auto h = static_cast<unsigned>(train_id) * 2654435761u;
  return {static_cast<unsigned char>(h >> 24), static_cast<unsigned char>(h >> 16),
          static_cast<unsigned char>(h >> 8)};
}

}  // namespace

std::vector<fs::path> sequence_files(const fs::path& root, const std::string& sequence,
                                     const std::string& subdir, const std::string& extension) {
  const fs::path dir = root / "sequences" / sequence / subdir;
  if (!fs::is_directory(dir)) fail(ErrorKind::kDataset, "missing directory " + dir.string());
  return files_with_extension(dir, extension);
}

StatsRun cmd_stats(const PipelineConfig& config, const std::vector<std::string>& sequences) {
  if (sequences.empty()) fail(ErrorKind::kDataset, "empty dataset: no sequences given");
  if (config.dataset_root.empty()) fail(ErrorKind::kDataset, "dataset root is not set");
  std::vector<fs::path> files;
  for (const auto& seq : sequences) {
    auto f = sequence_files(config.dataset_root, seq, "labels", ".label");
    files.insert(files.end(), f.begin(), f.end());
  }
  std::vector<StatsAccumulator> parts(files.size());
  parallel_for(files.size(), config.workers, [&](std::size_t i) {
    LabelArrays labels = read_labels(files[i], config.classes);
    PointCloud cloud;
    cloud.points.resize(labels.semantic.size());
    attach_labels(cloud, std::move(labels));
    accumulate_frame(parts[i], cloud, config.classes);
  });
  StatsRun run;
  run.counts = StatsAccumulator(config.classes.num_classes);
  for (const auto& p : parts) run.counts.merge(p);
  run.stats = finalize(run.counts, config.eps, config.classes);
  return run;
}

StatsRun merge_stats_shards(const PipelineConfig& config, const std::vector<fs::path>& shards) {
  if (shards.empty()) fail(ErrorKind::kDataset, "no stats shards to merge");
  StatsRun run;
  run.counts = StatsAccumulator(config.classes.num_classes);
  for (const auto& path : shards) {
    StatsAccumulator part;
    load_stats(path, config.classes, &part);
    if (part.points.empty()) {
      fail(ErrorKind::kDataset, path.string() + " holds no raw counts and cannot be merged");
    }
    run.counts.merge(part);
  }
  run.stats = finalize(run.counts, config.eps, config.classes);
  return run;
}

void write_range_render(const fs::path& path, const PointCloud& cloud,
                        const SensorGeometry& geom) {
  const RangeImage img = build_range_image(cloud, geom);
  const int h = geom.height;
  const int w = geom.width;
  std::string pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3, '\0');
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!img.valid(v, u)) continue;
      const double r = std::min(static_cast<double>(img.range(v, u)), 80.0);
      const double grey = 255.0 * (1.0 - r / 80.0);
      std::array<double, 3> rgb = {grey, grey, grey};
      const auto point = static_cast<std::size_t>(img.pixel_to_point.at(v, u));
      if (cloud.labeled() && cloud.semantic[point] != 0) {
        const auto c = class_color(cloud.semantic[point]);
        for (int k = 0; k < 3; ++k) rgb[static_cast<std::size_t>(k)] = 0.35 * grey + 0.65 * c[static_cast<std::size_t>(k)];
      }
      const std::size_t o = (static_cast<std::size_t>(v) * static_cast<std::size_t>(w) +
                             static_cast<std::size_t>(u)) * 3;
      for (std::size_t k = 0; k < 3; ++k) {
        pixels[o + k] = static_cast<char>(static_cast<unsigned char>(std::lround(rgb[k])));
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kDataset, "cannot write " + path.string());
  os << "P6\n" << w << " " << h << "\n255\n";
  os.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

AugmentRun cmd_augment(const PipelineConfig& config, const LabeledFrame& first,
                       const LabeledFrame& second, const std::string& stem,
                       const std::optional<fs::path>& render) {
  if (config.stats_file.empty() || !fs::exists(config.stats_file)) {
    fail(ErrorKind::kConfig,
         "class statistics file " +
             (config.stats_file.empty() ? std::string("(not set)") : config.stats_file.string()) +
             " not found; run `rangeseg stats` first");
  }
  const ClassStats stats = load_stats(config.stats_file, config.classes);
  const PointCloud a = read_labeled(first, config.classes);
  const PointCloud b = read_labeled(second, config.classes);
  AugmentParams params = config.augment;
  params.seed = config.seed;
  params.task = config.task;
  Rng rng(params.seed);
  AugmentRun run;
  run.cloud = wpd(a, b, stats, params, rng, &run.log);

  fs::create_directories(config.output_dir);
  write_point_cloud(config.output_dir / (stem + ".bin"), run.cloud);
  write_labels(config.output_dir / (stem + ".label"),
               PanopticResult{run.cloud.semantic, run.cloud.instance}, config.classes);
  if (render) write_range_render(*render, run.cloud, config.geometry);
  return run;
}

std::vector<std::pair<fs::path, fs::path>> pair_label_files(const fs::path& pred_dir,
                                                            const fs::path& gt_dir) {
  for (const auto& d : {pred_dir, gt_dir}) {
    if (!fs::is_directory(d)) fail(ErrorKind::kPairing, "not a directory: " + d.string());
  }
  std::set<std::string> pred, gt;
  for (const auto& p : files_with_extension(pred_dir, ".label")) pred.insert(p.filename().string());
  for (const auto& p : files_with_extension(gt_dir, ".label")) gt.insert(p.filename().string());
  std::vector<std::string> missing, extra;
  std::set_difference(gt.begin(), gt.end(), pred.begin(), pred.end(), std::back_inserter(missing));
  std::set_difference(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(extra));
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "prediction and ground-truth files do not pair up";
    if (!missing.empty()) msg += "; no prediction for: " + join(missing);
    if (!extra.empty()) msg += "; no ground truth for: " + join(extra);
    fail(ErrorKind::kPairing, msg);
  }
  if (gt.empty()) fail(ErrorKind::kPairing, "no .label files found to evaluate");
  std::vector<std::pair<fs::path, fs::path>> out;
  for (const auto& name : gt) out.emplace_back(pred_dir / name, gt_dir / name);
  return out;
}

EvalRun cmd_eval(const PipelineConfig& config, const fs::path& pred_dir, const fs::path& gt_dir,
                 Task task) {
  const auto pairs = pair_label_files(pred_dir, gt_dir);
  const ClassConfig& cfg = config.classes;
  std::vector<ConfusionAccumulator> conf(pairs.size(),
                                         ConfusionAccumulator(cfg.num_classes, cfg.ignore_id));
  std::vector<PanopticAccumulator> pan(pairs.size(), PanopticAccumulator(cfg.num_classes));
  parallel_for(pairs.size(), config.workers, [&](std::size_t i) {
    LabelArrays pred = read_labels(pairs[i].first, cfg);
    LabelArrays gt = read_labels(pairs[i].second, cfg);
    if (pred.semantic.size() != gt.semantic.size()) {
      fail(ErrorKind::kPairing, pairs[i].first.filename().string() + ": prediction has " +
                                    std::to_string(pred.semantic.size()) +
                                    " points, ground truth " + std::to_string(gt.semantic.size()));
    }
    if (task == Task::kSemantic) {
      accumulate_semantic(conf[i], pred.semantic, gt.semantic);
    } else {
      accumulate_panoptic(pan[i],
                          PanopticResult{std::move(pred.semantic), std::move(pred.instance)},
                          PanopticResult{std::move(gt.semantic), std::move(gt.instance)}, cfg);
    }
  });
  EvalRun run;
  run.task = task;
  run.files = pairs.size();
  run.confusion = ConfusionAccumulator(cfg.num_classes, cfg.ignore_id);
  run.panoptic_counts = PanopticAccumulator(cfg.num_classes);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    run.confusion.merge(conf[i]);
    run.panoptic_counts.merge(pan[i]);
  }
  if (task == Task::kSemantic) {
    run.semantic = miou(run.confusion);
  } else {
    run.panoptic = panoptic_report(run.panoptic_counts, cfg);
  }
  return run;
}

std::string EvalRun::json(const ClassConfig& cfg) const {
  return task == Task::kSemantic ? semantic_report_json(semantic, cfg)
                                 : panoptic_report_json(panoptic, cfg);
}

std::string EvalRun::table(const ClassConfig& cfg) const {
  return task == Task::kSemantic ? semantic_report_table(semantic, cfg)
                                 : panoptic_report_table(panoptic, cfg);
}

PanopticResult labels_from_outputs(const PipelineConfig& config, const Matrix& class_logits,
                                   const Matrix& mask_logits, const RangeImage& img) {
  const int h = img.geometry.height;
  const int w = img.geometry.width;
  if (mask_logits.cols() != static_cast<Eigen::Index>(h) * w) {
    fail(ErrorKind::kFixture, "mask logits cover " + std::to_string(mask_logits.cols()) +
                                  " pixels, range image has " + std::to_string(h * w));
  }
  if (class_logits.cols() != config.classes.num_classes + 1) {
    fail(ErrorKind::kFixture, "class logits have " + std::to_string(class_logits.cols()) +
                                  " columns, expected " +
                                  std::to_string(config.classes.num_classes + 1));
  }
  const std::vector<int> semantic = semantic_inference(class_logits, mask_logits);
  LabelImage sem(h, w);
  LabelImage ins(h, w, 0);
  for (std::size_t p = 0; p < semantic.size(); ++p) {
    sem.data[p] = ClassConfig::train_id_of_index(semantic[p]);
  }
  if (config.task == Task::kPanoptic) {
    const PanopticMap map = panoptic_inference(class_logits, mask_logits,
                                               thing_flags_by_index(config.classes),
                                               config.thresholds);
    std::vector<bool> thing_segment(map.segments.size() + 1, false);
    for (const Segment& s : map.segments) {
      thing_segment[static_cast<std::size_t>(s.id)] = s.is_thing;
    }
    for (std::size_t p = 0; p < semantic.size(); ++p) {
      // Void pixels keep the per-pixel semantic class so every point is labeled.
      if (map.class_index[p] < 0) continue;
      sem.data[p] = ClassConfig::train_id_of_index(map.class_index[p]);
      const int id = map.segment_id[p];
      ins.data[p] = thing_segment[static_cast<std::size_t>(id)] ? id : 0;
    }
  }
  const std::vector<int> point_sem = unproject_labels(sem, img);
  const std::vector<int> point_ins = unproject_labels(ins, img);
  std::vector<int> cleaned = config.knn_enabled ? knn_clean(sem, img, config.knn) : point_sem;
  return with_instances(std::move(cleaned), point_sem, point_ins);
}

InferMergeRun cmd_infer_merge(const PipelineConfig& config, const ModelFixture& fixture,
                              const std::vector<fs::path>& scans, const fs::path& output_dir) {
  if (fixture.spec.num_classes != config.classes.num_classes) {
    fail(ErrorKind::kFixture, "fixture predicts " + std::to_string(fixture.spec.num_classes) +
                                  " classes, class config has " +
                                  std::to_string(config.classes.num_classes));
  }
  const std::size_t n = scans.size();
  std::vector<RangeImage> images(n);
  std::vector<Matrix> class_logits(n);
  std::vector<Matrix> mask_logits(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    images[i] = build_range_image(read_point_cloud(scans[i]), config.geometry);
    FrameOutputs out = forward_frame(fixture, images[i]);
    class_logits[i] = std::move(out.class_logits);
    mask_logits[i] = std::move(out.mask_logits);
  });

  if (config.temporal_past + config.temporal_future > 0) {
    class_logits = temporal_filter_sequence(class_logits, config.temporal_past,
                                            config.temporal_future, config.temporal_space);
  }

  fs::create_directories(output_dir);
  InferMergeRun run;
  run.outputs.resize(n);
  run.predictions.resize(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    run.predictions[i] = labels_from_outputs(config, class_logits[i], mask_logits[i], images[i]);
    run.outputs[i] = output_dir / (scans[i].stem().string() + ".label");
    write_labels(run.outputs[i], run.predictions[i], config.classes);
  });
  return run;
}

std::vector<fs::path> cmd_postprocess(const PipelineConfig& config,
                                      const std::vector<LabeledFrame>& frames,
                                      const fs::path& output_dir) {
  fs::create_directories(output_dir);
  std::vector<fs::path> outputs(frames.size());
  parallel_for(frames.size(), config.workers, [&](std::size_t i) {
    const PointCloud cloud = read_labeled(frames[i], config.classes);
    const RangeImage img = build_range_image(cloud, config.geometry);
    const LabelImage sem = project_labels(cloud.semantic, img, config.classes.ignore_id);
    std::vector<int> instances(cloud.instance.begin(), cloud.instance.end());
    std::vector<int> cleaned = knn_clean(sem, img, config.knn);
    outputs[i] = output_dir / frames[i].labels.filename();
    write_labels(outputs[i], with_instances(std::move(cleaned), cloud.semantic, instances),
                 config.classes);
  });
  return outputs;
}

}  // namespace rangeseg
