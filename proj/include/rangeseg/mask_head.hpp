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

#include <Eigen/Core>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "rangeseg/kitti_io.hpp"
#include "rangeseg/loss_kernels.hpp"

namespace rangeseg {

/// C×H×W feature tensor, channel-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) {
    return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
  }
  /// View as a channels × (H*W) matrix.
  Eigen::Map<Matrix> matrix() {
    return {data.data(), channels, static_cast<Eigen::Index>(plane())};
  }
  Eigen::Map<const Matrix> matrix() const {
    return {data.data(), channels, static_cast<Eigen::Index>(plane())};
  }
};

/// y = x W^T + b on row vectors.
struct Linear {
  Matrix weight;  // out × in
  Vector bias;    // out

  Eigen::Index in_features() const { return weight.cols(); }
  Eigen::Index out_features() const { return weight.rows(); }
  Matrix forward(const Matrix& x) const;
};

struct LayerNorm {
  Vector gamma;
  Vector beta;
  double eps = 1e-5;

  Matrix forward(const Matrix& x) const;
};

struct AttentionParams {
  Linear q;
  Linear k;
  Linear v;
  Linear out;
  int num_heads = 1;
};

/// Scaled dot-product attention per head, concatenated and projected.
/// When `weights` is given it receives one Lq×Lk matrix per head.
Matrix multi_head_attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                            const AttentionParams& params,
                            std::vector<Matrix>* weights = nullptr);

struct DecoderConfig {
  int num_layers = 4;
  int num_queries = 100;
  int embed_dim = 256;
  int num_heads = 8;
  int ffn_dim = 2048;
  bool deep_a = false;  // keep per-layer outputs for auxiliary supervision

  void validate() const;
};

struct DecoderLayerParams {
  AttentionParams self_attn;
  AttentionParams cross_attn;
  Linear ffn1;
  Linear ffn2;
  LayerNorm norm1;
  LayerNorm norm2;
  LayerNorm norm3;
};

struct DecoderParams {
  std::vector<DecoderLayerParams> layers;
  LayerNorm final_norm;
  Linear class_head;  // (K+1) × C
  Linear mask_head;   // C' × C
  std::optional<Linear> input_proj;  // memory channels -> C
  // Positional encodings are optional slots; when absent none are added.
  std::optional<Matrix> query_pos;   // Q × C
  std::optional<Matrix> memory_pos;  // L × C
};

struct LayerOutputs {
  Matrix class_logits;     // Q × (K+1), last column = no-object
  Matrix mask_embeddings;  // Q × C'
};

struct QueryOutputs {
  Matrix class_logits;
  Matrix mask_embeddings;
  std::vector<LayerOutputs> per_layer;  // filled when deep_a is set
};

/// Pre-norm decoder: self-attention, cross-attention, FFN per layer, each
/// with a residual. Heads are shared across layers.
QueryOutputs decoder_forward(const Matrix& query_embeds, const Matrix& memory,
                             const DecoderConfig& config, const DecoderParams& params);

/// Flattens a C×h×w feature map into h*w tokens of C channels.
Matrix flatten_tokens(const FeatureMap& features);

/// Bilinear interpolation, align_corners = false.
FeatureMap bilinear_upsample(const FeatureMap& feature, int scale);

/// 1×1 convolution: out[o] = sum_c W[o][c] in[c] (+ b[o]).
FeatureMap pointwise_linear(const FeatureMap& feature, const Matrix& weight,
                            const Vector* bias = nullptr);

/// (C·s²)×h×w -> C×(h·s)×(w·s); channel c·s² + i·s + j fills offset (i, j).
FeatureMap pixel_shuffle(const FeatureMap& feature, int s);
FeatureMap pixel_unshuffle(const FeatureMap& feature, int s);

/// Data-dependent upsampling: per-location linear map to C'·s² channels,
/// then rearranged into s×s blocks.
FeatureMap dupsample(const FeatureMap& feature, const Matrix& weight, int s);

enum class UpsampleMode { kInterpolation, kDUpsampling };

struct PixelDecoderParams {
  std::array<Matrix, 3> up_weights;  // for x2 (s=2), x3 (s=4), x4 (s=8)
  Linear embed;  // concat -> embeddings
  Linear pixel;  // embeddings -> pixel embeddings
  bool activation = true;  // ReLU after the embedding projection
};

struct PixelEmbeddings {
  FeatureMap final;
  std::vector<FeatureMap> taps;  // x2↑, x3↑, x4↑
};

/// Upsamples x2..x4 to full resolution, concatenates with x0 and x1 and
/// projects to pixel embeddings.
PixelEmbeddings fid_decode(const std::array<FeatureMap, 5>& features,
                           const PixelDecoderParams& params, UpsampleMode mode);

/// Q × (H*W) mask logits.
Matrix predict_masks(const Matrix& mask_embeddings, const FeatureMap& pixel_embeddings);

/// Per-pixel class logits from one full-resolution tap (K×H×W).
FeatureMap aux_semantic_logits(const FeatureMap& tap, const Linear& head);

/// Auxiliary outputs on the pixel-decoder taps; one map per tap.
std::vector<FeatureMap> deep_b_aux(const PixelEmbeddings& pixels, std::span<const Linear> heads);

struct AuxPrediction {
  Matrix class_logits;
  Matrix mask_logits;
  std::vector<int> semantic;
};

/// Auxiliary outputs per decoder layer (requires deep_a outputs).
std::vector<AuxPrediction> deep_a_aux(const QueryOutputs& outputs,
                                      const FeatureMap& pixel_embeddings);

Matrix softmax_rows(const Matrix& logits);
double sigmoid(double x);

/// Per pixel, argmax over real classes of sum_q p_q(c) sigmoid(m_q); ties go
/// to the lowest class index.
std::vector<int> semantic_inference(const Matrix& class_logits, const Matrix& mask_logits);

struct PanopticThresholds {
  double object = 0.8;
  double overlap = 0.8;
};

struct Segment {
  int id = 0;
  int class_index = 0;
  bool is_thing = false;
  int query = 0;  // first query contributing to the segment
  std::size_t area = 0;
};

struct PanopticMap {
  std::vector<int> class_index;  // -1 for void pixels
  std::vector<int> segment_id;   // 0 for void pixels
  std::vector<Segment> segments;
};

/// Thing flag per class index, from the train-id table of `cfg`.
std::vector<bool> thing_flags_by_index(const ClassConfig& cfg);

PanopticMap panoptic_inference(const Matrix& class_logits, const Matrix& mask_logits,
                               const std::vector<bool>& is_thing,
                               const PanopticThresholds& thresholds = {});

}  // namespace rangeseg
