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

#include <cmath>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/mask_head.hpp"

namespace rangeseg {
namespace {

LayerOutputs apply_heads(const Matrix& x, const DecoderParams& params) {
  const Matrix normed = params.final_norm.forward(x);
  return {params.class_head.forward(normed), params.mask_head.forward(normed)};
}

}  // namespace

Matrix Linear::forward(const Matrix& x) const {
  if (x.cols() != weight.cols()) {
    fail(ErrorKind::kShape, "linear layer expects " + std::to_string(weight.cols()) +
                                " inputs, got " + std::to_string(x.cols()));
  }
  Matrix y = x * weight.transpose();
  if (bias.size() == weight.rows()) y.rowwise() += bias.transpose();
  return y;
}

Matrix LayerNorm::forward(const Matrix& x) const {
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    fail(ErrorKind::kShape, "layer norm width mismatch");
  }
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    y.row(i) = ((x.row(i).array() - mean) * inv).matrix().cwiseProduct(gamma.transpose()) +
               beta.transpose();
  }
  return y;
}

Matrix multi_head_attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                            const AttentionParams& params, std::vector<Matrix>* weights) {
  if (keys.rows() != values.rows()) {
    fail(ErrorKind::kShape, "keys and values must have the same length");
  }
  const Matrix q = params.q.forward(queries);
  const Matrix k = params.k.forward(keys);
  const Matrix v = params.v.forward(values);
  const auto dim = q.cols();
  if (k.cols() != dim || v.cols() != dim || params.num_heads < 1 || dim % params.num_heads != 0) {
    fail(ErrorKind::kShape, "attention width must be divisible by the head count");
  }
  const auto head_dim = dim / params.num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix concat(q.rows(), dim);
  if (weights != nullptr) weights->clear();
  for (int h = 0; h < params.num_heads; ++h) {
    const auto off = h * head_dim;
    Matrix scores = q.middleCols(off, head_dim) * k.middleCols(off, head_dim).transpose() * scale;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const double m = scores.row(i).maxCoeff();
      scores.row(i) = (scores.row(i).array() - m).exp().matrix();
      scores.row(i) /= scores.row(i).sum();
    }
    concat.middleCols(off, head_dim) = scores * v.middleCols(off, head_dim);
    if (weights != nullptr) weights->push_back(std::move(scores));
  }
  return params.out.forward(concat);
}

void DecoderConfig::validate() const {
  if (num_layers < 1) fail(ErrorKind::kConfig, "decoder needs at least one layer");
  if (num_queries < 1) fail(ErrorKind::kConfig, "decoder needs at least one query");
  if (num_heads < 1 || embed_dim % num_heads != 0) {
    fail(ErrorKind::kConfig, "embed_dim must be divisible by num_heads");
  }
  if (ffn_dim < 1) fail(ErrorKind::kConfig, "ffn_dim must be positive");
}

QueryOutputs decoder_forward(const Matrix& query_embeds, const Matrix& memory,
                             const DecoderConfig& config, const DecoderParams& params) {
  config.validate();
  if (query_embeds.cols() != config.embed_dim) {
    fail(ErrorKind::kShape, "query embeddings must have embed_dim columns");
  }
  if (static_cast<int>(params.layers.size()) != config.num_layers) {
    fail(ErrorKind::kShape, "parameter set has " + std::to_string(params.layers.size()) +
                                " layers, config expects " + std::to_string(config.num_layers));
  }
  const Matrix mem = params.input_proj ? params.input_proj->forward(memory) : memory;
  if (mem.cols() != config.embed_dim) fail(ErrorKind::kShape, "memory width must equal embed_dim");

  const Matrix query_pos = params.query_pos.value_or(Matrix::Zero(query_embeds.rows(), mem.cols()));
  const Matrix memory_pos = params.memory_pos.value_or(Matrix::Zero(mem.rows(), mem.cols()));
  if (query_pos.rows() != query_embeds.rows() || memory_pos.rows() != mem.rows()) {
    fail(ErrorKind::kShape, "positional encoding length mismatch");
  }
  const Matrix keys = mem + memory_pos;

  QueryOutputs out;
  Matrix x = query_embeds;
  for (const DecoderLayerParams& layer : params.layers) {
    Matrix h = layer.norm1.forward(x);
    const Matrix hq = h + query_pos;
    x += multi_head_attention(hq, hq, h, layer.self_attn);

    h = layer.norm2.forward(x);
    x += multi_head_attention(h + query_pos, keys, mem, layer.cross_attn);

    h = layer.norm3.forward(x);
    x += layer.ffn2.forward(layer.ffn1.forward(h).cwiseMax(0.0));

    if (config.deep_a) out.per_layer.push_back(apply_heads(x, params));
  }
  LayerOutputs last = apply_heads(x, params);
  out.class_logits = std::move(last.class_logits);
  out.mask_embeddings = std::move(last.mask_embeddings);
  return out;
}

Matrix flatten_tokens(const FeatureMap& features) { return features.matrix().transpose(); }

}  // namespace rangeseg
