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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rangeseg/error.hpp"
#include "rangeseg/pipeline.hpp"
#include "rangeseg/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rangeseg;

namespace {

enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kConfigExit = 2,
  kDatasetExit = 3,
  kPairingExit = 4,
  kFixtureExit = 5,
  kNumericExit = 6,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return kConfigExit;
    case ErrorKind::kDataset:
    case ErrorKind::kMalformed:
    case ErrorKind::kCorrupt: return kDatasetExit;
    case ErrorKind::kPairing: return kPairingExit;
    case ErrorKind::kFixture: return kFixtureExit;
    case ErrorKind::kNumeric: return kNumericExit;
    default: return kUsage;
  }
}

struct Common {
  std::string config_path;
  std::optional<std::string> dataset_root;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> task;
  std::optional<std::string> output_dir;
};

struct KnnFlags {
  std::optional<int> k;
  std::optional<int> window;
  std::optional<double> sigma;
  std::optional<double> cutoff;
  bool disable = false;

  void add(CLI::App* app) {
    app->add_option("--knn-k", k, "Neighbours voting per point");
    app->add_option("--knn-window", window, "Odd search window edge in pixels");
    app->add_option("--knn-sigma", sigma, "Gaussian range kernel width (m)");
    app->add_option("--knn-cutoff", cutoff, "Maximum range difference of a neighbour (m)");
    app->add_flag("--no-knn", disable, "Skip KNN cleaning");
  }
  void apply(PipelineConfig& c) const {
    if (k) c.knn.k = *k;
    if (window) c.knn.window = *window;
    if (sigma) c.knn.sigma = *sigma;
    if (cutoff) c.knn.cutoff = *cutoff;
    if (disable) c.knn_enabled = false;
  }
};

PipelineConfig resolve_config(const Common& common) {
  PipelineConfig c = common.config_path.empty() ? parse_pipeline_config("{}")
                                                : load_pipeline_config(common.config_path);
  apply_environment(c);
  if (common.dataset_root) c.dataset_root = *common.dataset_root;
  if (common.workers) c.workers = *common.workers;
  if (common.seed) c.seed = *common.seed;
  if (common.task) c.task = parse_task(*common.task);
  if (common.output_dir) c.output_dir = *common.output_dir;
  c.augment.seed = c.seed;
  c.augment.task = c.task;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorKind::kConfig, "cannot write " + path.string());
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-view LiDAR segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("-c,--config", common.config_path, "Pipeline config document (JSON)");
  app.add_option("--dataset-root", common.dataset_root,
                 std::string("Dataset root; overrides ") + kDatasetRootEnv + " and the config");
  app.add_option("-j,--workers", common.workers, "Worker threads");
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--task", common.task, "semantic or panoptic");
  app.add_option("-o,--output-dir", common.output_dir, "Output directory");

  // stats
  auto* stats = app.add_subcommand("stats", "Class statistics and re-balance weights");
  std::vector<std::string> stats_sequences;
  std::string stats_out;
  std::string stats_published;
  std::vector<std::string> stats_merge;
  std::optional<double> stats_eps;
  std::optional<double> stats_threshold;
  stats->add_option("--sequences", stats_sequences, "Sequences to count (default: train split)");
  stats->add_option("--out", stats_out, "Write the stats document here");
  stats->add_option("--published", stats_published,
                    "Derive weights from a stats document instead of counting labels");
  stats->add_option("--merge", stats_merge, "Merge count shards from earlier runs");
  stats->add_option("--eps", stats_eps, "Frequency smoothing constant");
  stats->add_option("--threshold", stats_threshold, "Long-tail threshold t");

  // augment
  auto* augment = app.add_subcommand("augment", "Weighted Paste Drop on two labeled frames");
  std::string aug_scan_a, aug_labels_a, aug_scan_b, aug_labels_b, aug_stem = "augmented";
  std::optional<std::string> aug_stats, aug_render;
  std::optional<double> aug_threshold;
  augment->add_option("--scan-a", aug_scan_a, "Scan receiving pastes")->required();
  augment->add_option("--labels-a", aug_labels_a, "Labels of --scan-a")->required();
  augment->add_option("--scan-b", aug_scan_b, "Scan providing long-tail objects")->required();
  augment->add_option("--labels-b", aug_labels_b, "Labels of --scan-b")->required();
  augment->add_option("--stats", aug_stats, "Stats document from `rangeseg stats`");
  augment->add_option("--stem", aug_stem, "Output file stem");
  augment->add_option("--render", aug_render, "Also write a PPM range-image render");
  augment->add_option("--threshold", aug_threshold, "Long-tail threshold t");

  // eval
  std::string pred_dir, gt_dir, report_path;
  bool print_json = false;
  auto add_eval = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--pred", pred_dir, "Directory of predicted .label files")->required();
    sub->add_option("--gt", gt_dir, "Directory of ground-truth .label files")->required();
    sub->add_option("--report", report_path, "Write the JSON report here");
    sub->add_flag("--json", print_json, "Print the JSON report instead of the table");
    return sub;
  };
  auto* eval_sem = add_eval("eval-sem", "Semantic evaluation (mIoU)");
  auto* eval_pan = add_eval("eval-pan", "Panoptic evaluation (PQ, RQ, SQ, PQ-dagger)");

  // infer-merge
  auto* infer = app.add_subcommand("infer-merge", "Network inference and post-processing");
  std::string fixture_path;
  std::vector<std::string> infer_scans;
  std::optional<std::string> infer_sequence;
  std::optional<int> temporal_past, temporal_future;
  std::optional<std::string> temporal_space;
  KnnFlags infer_knn;
  infer->add_option("--fixture", fixture_path, "Network parameter file")->required();
  infer->add_option("--scans", infer_scans, "Scan files, in temporal order");
  infer->add_option("--sequence", infer_sequence, "Use all scans of this dataset sequence");
  infer->add_option("--temporal-K", temporal_past, "Past frames in the temporal window");
  infer->add_option("--temporal-L", temporal_future, "Future frames in the temporal window");
  infer->add_option("--temporal-space", temporal_space, "logits or probabilities");
  infer_knn.add(infer);

  // postprocess
  auto* post = app.add_subcommand("postprocess", "KNN cleaning of existing predictions");
  std::vector<std::string> post_scans, post_labels;
  KnnFlags post_knn;
  post->add_option("--scans", post_scans, "Scan files")->required();
  post->add_option("--labels", post_labels, "Predicted label files, one per scan")->required();
  post_knn.add(post);

  // loss-audit
  auto* audit = app.add_subcommand("loss-audit", "Finite-difference checks of the loss kernels");
  int audit_instances = 50;
  bool sign_flip = false;
  audit->add_option("--instances", audit_instances, "Random instances per loss");
  audit->add_flag("--inject-sign-flip", sign_flip, "Negate the focal gradient (self-test)");

  // make-fixture
  auto* make_fixture = app.add_subcommand("make-fixture", "Write a seeded random network");
  std::string fixture_out;
  ModelSpec spec;
  std::string upsample = "dup";
  make_fixture->add_option("--out", fixture_out, "Output parameter file")->required();
  make_fixture->add_option("--queries", spec.decoder.num_queries, "Number of queries");
  make_fixture->add_option("--layers", spec.decoder.num_layers, "Decoder layers");
  make_fixture->add_option("--embed-dim", spec.decoder.embed_dim, "Decoder width");
  make_fixture->add_option("--heads", spec.decoder.num_heads, "Attention heads");
  make_fixture->add_option("--upsample", upsample, "dup or interp");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled sequence");
  std::string synth_root, synth_sequence = "00";
  int synth_frames = 3;
  SyntheticSceneParams scene;
  synth->add_option("--root", synth_root, "Dataset root to write into")->required();
  synth->add_option("--sequence", synth_sequence, "Sequence name");
  synth->add_option("--frames", synth_frames, "Number of frames");
  synth->add_option("--azimuth-steps", scene.azimuth_steps, "Rays per beam");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    PipelineConfig config = resolve_config(common);

    if (stats->parsed()) {
      if (stats_eps) config.eps = *stats_eps;
      const double t = stats_threshold.value_or(config.augment.t);
      StatsRun run;
      bool have_counts = true;
      if (!stats_published.empty()) {
        run.stats = load_stats(stats_published, config.classes);
        if (stats_eps) {
          run.stats = stats_from_frequencies(run.stats.f, run.stats.sem, run.stats.ins,
                                             config.eps, config.classes);
        }
        have_counts = false;
      } else if (!stats_merge.empty()) {
        run = merge_stats_shards(config, {stats_merge.begin(), stats_merge.end()});
      } else {
        if (stats_sequences.empty() && config.splits.count("train")) {
          stats_sequences = config.splits.at("train");
        }
        run = cmd_stats(config, stats_sequences);
      }
      std::cout << format_stats_table(run.stats);
      for (Task task : {Task::kSemantic, Task::kPanoptic}) {
        const auto tail = long_tail_split(run.stats, t, task);
        std::cout << "long-tail (" << to_string(task) << ", t=" << t << "):";
        for (int c = 1; c <= run.stats.num_classes; ++c) {
          if (tail[static_cast<std::size_t>(c)]) std::cout << " " << run.stats.names[static_cast<std::size_t>(c)];
        }
        std::cout << "\n";
      }
      fs::path out = !stats_out.empty()          ? fs::path(stats_out)
                     : !config.stats_file.empty() ? config.stats_file
                                                  : config.output_dir / "stats.json";
      if (!fs::is_directory(out.parent_path().empty() ? fs::path(".") : out.parent_path())) {
        fs::create_directories(out.parent_path());
      }
      save_stats(out, run.stats, have_counts ? &run.counts : nullptr);
      std::cerr << "wrote " << out.string() << "\n";
      return kOk;
    }

    if (augment->parsed()) {
      if (aug_stats) config.stats_file = *aug_stats;
      if (aug_threshold) config.augment.t = *aug_threshold;
      config.augment.validate();
      std::optional<fs::path> render;
      if (aug_render) render = fs::path(*aug_render);
      const AugmentRun run = cmd_augment(config, {aug_scan_a, aug_labels_a},
                                         {aug_scan_b, aug_labels_b}, aug_stem, render);
      std::size_t pasted = 0, dropped = 0;
      for (const auto& p : run.log.pastes) pasted += p.pasted ? p.num_points : 0;
      for (const auto& d : run.log.drops) dropped += d.num_points_removed;
      std::cout << "points " << run.cloud.size() << ", pasted " << pasted << ", dropped "
                << dropped << "\n";
      return kOk;
    }

    if (eval_sem->parsed() || eval_pan->parsed()) {
      const Task task = eval_sem->parsed() ? Task::kSemantic : Task::kPanoptic;
      const EvalRun run = cmd_eval(config, pred_dir, gt_dir, task);
      const std::string json = run.json(config.classes);
      std::cout << (print_json ? json : run.table(config.classes));
      if (!report_path.empty()) write_text(report_path, json);
      return kOk;
    }

    if (infer->parsed()) {
      if (temporal_past) config.temporal_past = *temporal_past;
      if (temporal_future) config.temporal_future = *temporal_future;
      if (temporal_space) {
        if (*temporal_space == "logits") {
          config.temporal_space = TemporalSpace::kLogits;
        } else if (*temporal_space == "probabilities") {
          config.temporal_space = TemporalSpace::kProbabilities;
        } else {
          fail(ErrorKind::kConfig, "--temporal-space must be logits or probabilities");
        }
      }
      infer_knn.apply(config);
      config.validate();
      std::vector<fs::path> scans(infer_scans.begin(), infer_scans.end());
      if (infer_sequence) {
        if (config.dataset_root.empty()) fail(ErrorKind::kDataset, "dataset root is not set");
        const auto found = sequence_files(config.dataset_root, *infer_sequence, "velodyne", ".bin");
        scans.insert(scans.end(), found.begin(), found.end());
      }
      if (scans.empty()) fail(ErrorKind::kDataset, "no scans given");
      const ModelFixture fixture = load_fixture(fixture_path, config.classes.num_classes);
      const InferMergeRun run = cmd_infer_merge(config, fixture, scans, config.output_dir);
      for (const auto& p : run.outputs) std::cout << p.string() << "\n";
      return kOk;
    }

    if (post->parsed()) {
      post_knn.apply(config);
      config.validate();
      if (post_scans.size() != post_labels.size()) {
        fail(ErrorKind::kPairing, "need one label file per scan");
      }
      std::vector<LabeledFrame> frames;
      for (std::size_t i = 0; i < post_scans.size(); ++i) {
        frames.push_back({post_scans[i], post_labels[i]});
      }
      for (const auto& p : cmd_postprocess(config, frames, config.output_dir)) {
        std::cout << p.string() << "\n";
      }
      return kOk;
    }

    if (audit->parsed()) {
      const AuditReport report = cmd_loss_audit(config, audit_instances, sign_flip);
      std::cout << report.text();
      return report.all_pass() ? kOk : kNumericExit;
    }

    if (make_fixture->parsed()) {
      spec.num_classes = config.classes.num_classes;
      if (upsample == "dup") {
        spec.upsample = UpsampleMode::kDUpsampling;
      } else if (upsample == "interp") {
        spec.upsample = UpsampleMode::kInterpolation;
      } else {
        fail(ErrorKind::kConfig, "--upsample must be dup or interp");
      }
      save_fixture(fixture_out, random_fixture(spec, config.seed));
      return kOk;
    }

    if (synth->parsed()) {
      write_synthetic_sequence(synth_root, synth_sequence, synth_frames, config.classes,
                               config.geometry, scene, config.seed);
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
