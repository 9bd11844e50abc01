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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rangeseg/class_stats.hpp"
#include "rangeseg/kitti_io.hpp"
#include "rangeseg/loss_kernels.hpp"
#include "rangeseg/mask_head.hpp"
#include "rangeseg/model.hpp"
#include "rangeseg/postprocess.hpp"
#include "rangeseg/range_projection.hpp"
#include "rangeseg/seg_metrics.hpp"
#include "rangeseg/wpd_augment.hpp"

namespace rangeseg {

inline constexpr const char* kDatasetRootEnv = "RANGESEG_DATASET_ROOT";

/// Settings shared by all batch commands. See README for the document layout.
struct PipelineConfig {
  std::filesystem::path dataset_root;
  std::map<std::string, std::vector<std::string>> splits;  // split -> sequences
  ClassConfig classes = semantic_kitti_config();
  SensorGeometry geometry;
  AugmentParams augment;
  LossWeights loss;
  double eps = kDefaultEps;
  KnnParams knn;
  bool knn_enabled = true;
  int temporal_past = 0;
  int temporal_future = 0;
  TemporalSpace temporal_space = TemporalSpace::kLogits;
  PanopticThresholds thresholds;
  Task task = Task::kSemantic;
  std::filesystem::path stats_file;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Parses a JSON config document. Relative paths resolve against
/// `base_dir`; a referenced class config must exist. Unknown keys are
/// rejected so typos surface as config errors.
PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir = ".");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Replaces the dataset root with the environment override when set.
void apply_environment(PipelineConfig& config);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown for the lowest failing index, so failures do not depend on
/// scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Frame files of a sequence, sorted by name.
std::vector<std::filesystem::path> sequence_files(const std::filesystem::path& root,
                                                  const std::string& sequence,
                                                  const std::string& subdir,
                                                  const std::string& extension);

struct StatsRun {
  ClassStats stats;
  StatsAccumulator counts;
};

/// Counts labels of the given sequences under the dataset root. Throws a
/// dataset error for an empty sequence list, a missing label directory or a
/// dataset without labeled points.
StatsRun cmd_stats(const PipelineConfig& config, const std::vector<std::string>& sequences);

/// Merges count shards saved by earlier stats runs.
StatsRun merge_stats_shards(const PipelineConfig& config,
                            const std::vector<std::filesystem::path>& shards);

struct LabeledFrame {
  std::filesystem::path scan;
  std::filesystem::path labels;
};

struct AugmentRun {
  PointCloud cloud;
  AugmentLog log;
};

/// Weighted Paste Drop on two labeled frames. Writes <stem>.bin and
/// <stem>.label into the output directory, plus an optional range-image
/// render. Throws a config error naming the stats command when the stats
/// file is missing.
AugmentRun cmd_augment(const PipelineConfig& config, const LabeledFrame& first,
                       const LabeledFrame& second, const std::string& stem,
                       const std::optional<std::filesystem::path>& render);

/// Binary PPM of the range image: grey by range, class-colored where labeled.
void write_range_render(const std::filesystem::path& path, const PointCloud& cloud,
                        const SensorGeometry& geom);

struct EvalRun {
  Task task = Task::kSemantic;
  std::size_t files = 0;
  ConfusionAccumulator confusion;
  MiouResult semantic;
  PanopticAccumulator panoptic_counts;
  PanopticReport panoptic;

  std::string json(const ClassConfig& cfg) const;
  std::string table(const ClassConfig& cfg) const;
};

/// Pairs *.label files of both directories by name. Throws a pairing error
/// listing files present on one side only, or when nothing pairs.
std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pair_label_files(
    const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

EvalRun cmd_eval(const PipelineConfig& config, const std::filesystem::path& pred_dir,
                 const std::filesystem::path& gt_dir, Task task);

struct InferMergeRun {
  std::vector<std::filesystem::path> outputs;
  std::vector<PanopticResult> predictions;
};

/// Projection, network forward, optional temporal filter over the scan
/// sequence, semantic or panoptic inference, unprojection and KNN cleaning.
/// Scans are treated as consecutive frames in the given order. Output is
/// <output_dir>/<scan stem>.label and does not depend on the worker count.
InferMergeRun cmd_infer_merge(const PipelineConfig& config, const ModelFixture& fixture,
                              const std::vector<std::filesystem::path>& scans,
                              const std::filesystem::path& output_dir);

/// Per-point labels of one frame from its network outputs.
PanopticResult labels_from_outputs(const PipelineConfig& config, const Matrix& class_logits,
                                   const Matrix& mask_logits, const RangeImage& img);

/// KNN cleaning of existing predictions: each scan's labels are projected,
/// cleaned and written to <output_dir>/<label name>.
std::vector<std::filesystem::path> cmd_postprocess(const PipelineConfig& config,
                                                   const std::vector<LabeledFrame>& frames,
                                                   const std::filesystem::path& output_dir);

struct AuditLine {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditLine> lines;
  bool all_pass() const;
  std::string text() const;
};

/// Finite-difference checks of every loss kernel on random small instances,
/// plus the focal/cross-entropy reduction at gamma = 0. With
/// `flip_focal_sign` the focal gradient is negated before checking, which
/// must make the focal lines fail.
AuditReport cmd_loss_audit(const PipelineConfig& config, int instances, bool flip_focal_sign);

}  // namespace rangeseg
