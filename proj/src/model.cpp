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

#include "rangeseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/rng.hpp"

namespace rangeseg {
namespace {

double round_float(double v) { return static_cast<double>(static_cast<float>(v)); }

Linear random_linear(Rng& rng, int out, int in, bool bias = true) {
  const double a = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight.resize(out, in);
  for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
    l.weight.data()[i] = round_float(rng.uniform(-a, a));
  }
  if (bias) {
    l.bias.resize(out);
    for (Eigen::Index i = 0; i < out; ++i) l.bias[i] = round_float(rng.uniform(-a, a));
  } else {
    l.bias = Vector::Zero(out);
  }
  return l;
}

LayerNorm unit_norm(int dim) { return {Vector::Ones(dim), Vector::Zero(dim), 1e-5}; }

AttentionParams random_attention(Rng& rng, int dim, int heads) {
  AttentionParams p;
  p.q = random_linear(rng, dim, dim);
  p.k = random_linear(rng, dim, dim);
  p.v = random_linear(rng, dim, dim);
  p.out = random_linear(rng, dim, dim);
  p.num_heads = heads;
  return p;
}

void put_linear(TensorMap& t, const std::string& name, const Linear& l) {
  t[name + ".weight"] = tensor_from_matrix(l.weight);
  t[name + ".bias"] = tensor_from_vector(l.bias);
}

void put_norm(TensorMap& t, const std::string& name, const LayerNorm& n) {
  t[name + ".gamma"] = tensor_from_vector(n.gamma);
  t[name + ".beta"] = tensor_from_vector(n.beta);
}

void put_attention(TensorMap& t, const std::string& name, const AttentionParams& a) {
  put_linear(t, name + ".q", a.q);
  put_linear(t, name + ".k", a.k);
  put_linear(t, name + ".v", a.v);
  put_linear(t, name + ".out", a.out);
}

Linear get_linear(const TensorMap& t, const std::string& name, long out, long in) {
  Linear l;
  l.weight = matrix_from_tensor(t, name + ".weight", out, in);
  l.bias = vector_from_tensor(t, name + ".bias", l.weight.rows());
  return l;
}

LayerNorm get_norm(const TensorMap& t, const std::string& name, long dim) {
  return {vector_from_tensor(t, name + ".gamma", dim), vector_from_tensor(t, name + ".beta", dim),
          1e-5};
}

AttentionParams get_attention(const TensorMap& t, const std::string& name, long dim, int heads) {
  AttentionParams a;
  a.q = get_linear(t, name + ".q", dim, dim);
  a.k = get_linear(t, name + ".k", dim, dim);
  a.v = get_linear(t, name + ".v", dim, dim);
  a.out = get_linear(t, name + ".out", dim, dim);
  a.num_heads = heads;
  return a;
}

int positive_int(const TensorMap& t, const std::string& name) {
  const double v = scalar_from_tensor(t, name);
  if (!(v >= 1.0) || v != std::floor(v)) {
    fail(ErrorKind::kFixture, "tensor " + name + " must be a positive integer");
  }
  return static_cast<int>(v);
}

FeatureMap avg_pool2(const FeatureMap& f) {
  FeatureMap out(f.channels, f.height / 2, f.width / 2);
  for (int c = 0; c < f.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        out.at(c, y, x) = 0.25 * (f.at(c, 2 * y, 2 * x) + f.at(c, 2 * y, 2 * x + 1) +
                                  f.at(c, 2 * y + 1, 2 * x) + f.at(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

FeatureMap relu_linear(const FeatureMap& f, const Linear& l) {
  FeatureMap out = pointwise_linear(f, l.weight, &l.bias);
  for (double& v : out.data) v = std::max(v, 0.0);
  return out;
}

}  // namespace

void ModelSpec::validate() const {
  if (num_classes < 1) fail(ErrorKind::kConfig, "model needs at least one class");
  if (stem_channels < 1 || tap_channels < 1 || pixel_hidden < 1 || mask_dim < 1) {
    fail(ErrorKind::kConfig, "model widths must be positive");
  }
  decoder.validate();
}

ModelFixture random_fixture(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelFixture m;
  m.spec = spec;
  const int c = spec.stem_channels;
  const int d = spec.decoder.embed_dim;
  m.input_scale.resize(kNumRangeChannels);
  m.input_scale << 1.0 / 64.0, 1.0 / 64.0, 1.0 / 4.0, 1.0, 1.0 / 64.0;
  m.stem[0] = random_linear(rng, c, kNumRangeChannels);
  for (std::size_t i = 1; i < m.stem.size(); ++i) m.stem[i] = random_linear(rng, c, c);

  for (int k = 0; k < 3; ++k) {
    const int s = 2 << k;
    m.pixel_decoder.up_weights[static_cast<std::size_t>(k)] =
        random_linear(rng, spec.tap_channels * s * s, c, false).weight;
  }
  m.pixel_decoder.embed = random_linear(rng, spec.pixel_hidden, 2 * c + 3 * spec.tap_width());
  m.pixel_decoder.pixel = random_linear(rng, spec.mask_dim, spec.pixel_hidden);
  m.pixel_decoder.activation = spec.pixel_activation;

  m.query_embed = random_linear(rng, spec.decoder.num_queries, d, false).weight;
  m.decoder.input_proj = random_linear(rng, d, c);
  for (int l = 0; l < spec.decoder.num_layers; ++l) {
    DecoderLayerParams layer;
    layer.self_attn = random_attention(rng, d, spec.decoder.num_heads);
    layer.cross_attn = random_attention(rng, d, spec.decoder.num_heads);
    layer.ffn1 = random_linear(rng, spec.decoder.ffn_dim, d);
    layer.ffn2 = random_linear(rng, d, spec.decoder.ffn_dim);
    layer.norm1 = unit_norm(d);
    layer.norm2 = unit_norm(d);
    layer.norm3 = unit_norm(d);
    m.decoder.layers.push_back(std::move(layer));
  }
  m.decoder.final_norm = unit_norm(d);
  m.decoder.class_head = random_linear(rng, spec.num_classes + 1, d);
  m.decoder.mask_head = random_linear(rng, spec.mask_dim, d);
  for (auto& head : m.deep_b) head = random_linear(rng, spec.num_classes, spec.tap_width());
  return m;
}

TensorMap fixture_to_tensors(const ModelFixture& m) {
  TensorMap t;
  t["meta.num_classes"] = tensor_from_scalar(m.spec.num_classes);
  t["meta.num_heads"] = tensor_from_scalar(m.spec.decoder.num_heads);
  t["meta.upsample"] = tensor_from_scalar(m.spec.upsample == UpsampleMode::kDUpsampling ? 1 : 0);
  t["meta.pixel_activation"] = tensor_from_scalar(m.spec.pixel_activation ? 1 : 0);
  t["stem.input_scale"] = tensor_from_vector(m.input_scale);
  for (std::size_t i = 0; i < m.stem.size(); ++i) {
    put_linear(t, "stem." + std::to_string(i), m.stem[i]);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    t["pixel_decoder.up." + std::to_string(k) + ".weight"] =
        tensor_from_matrix(m.pixel_decoder.up_weights[k]);
  }
  put_linear(t, "pixel_decoder.embed", m.pixel_decoder.embed);
  put_linear(t, "pixel_decoder.pixel", m.pixel_decoder.pixel);
  t["decoder.query_embed"] = tensor_from_matrix(m.query_embed);
  put_linear(t, "decoder.input_proj", *m.decoder.input_proj);
  for (std::size_t l = 0; l < m.decoder.layers.size(); ++l) {
    const std::string p = "decoder.layers." + std::to_string(l);
    const DecoderLayerParams& layer = m.decoder.layers[l];
    put_attention(t, p + ".self_attn", layer.self_attn);
    put_attention(t, p + ".cross_attn", layer.cross_attn);
    put_linear(t, p + ".ffn1", layer.ffn1);
    put_linear(t, p + ".ffn2", layer.ffn2);
    put_norm(t, p + ".norm1", layer.norm1);
    put_norm(t, p + ".norm2", layer.norm2);
    put_norm(t, p + ".norm3", layer.norm3);
  }
  put_norm(t, "decoder.norm", m.decoder.final_norm);
  put_linear(t, "decoder.class_head", m.decoder.class_head);
  put_linear(t, "decoder.mask_head", m.decoder.mask_head);
  for (std::size_t k = 0; k < m.deep_b.size(); ++k) {
    put_linear(t, "aux.deepb." + std::to_string(k), m.deep_b[k]);
  }
  return t;
}

ModelFixture fixture_from_tensors(const TensorMap& t, int expected_num_classes) {
  ModelFixture m;
  ModelSpec& spec = m.spec;
  spec.num_classes = positive_int(t, "meta.num_classes");
  if (expected_num_classes >= 0 && spec.num_classes != expected_num_classes) {
    fail(ErrorKind::kFixture, "fixture predicts " + std::to_string(spec.num_classes) +
                                  " classes, class config has " +
                                  std::to_string(expected_num_classes));
  }
  spec.decoder.num_heads = positive_int(t, "meta.num_heads");
  spec.upsample = scalar_from_tensor(t, "meta.upsample") != 0.0 ? UpsampleMode::kDUpsampling
                                                                 : UpsampleMode::kInterpolation;
  spec.pixel_activation = scalar_from_tensor(t, "meta.pixel_activation") != 0.0;

  m.input_scale = vector_from_tensor(t, "stem.input_scale", kNumRangeChannels);
  m.stem[0] = get_linear(t, "stem.0", -1, kNumRangeChannels);
  const long c = m.stem[0].weight.rows();
  spec.stem_channels = static_cast<int>(c);
  for (std::size_t i = 1; i < m.stem.size(); ++i) {
    m.stem[i] = get_linear(t, "stem." + std::to_string(i), c, c);
  }

  long tap = -1;
  for (int k = 0; k < 3; ++k) {
    const long s = 2L << k;
    Matrix w = matrix_from_tensor(t, "pixel_decoder.up." + std::to_string(k) + ".weight", -1, c);
    if (w.rows() % (s * s) != 0 || (tap >= 0 && w.rows() / (s * s) != tap)) {
      fail(ErrorKind::kFixture, "pixel_decoder.up weights disagree on the tap width");
    }
    tap = w.rows() / (s * s);
    m.pixel_decoder.up_weights[static_cast<std::size_t>(k)] = std::move(w);
  }
  spec.tap_channels = static_cast<int>(tap);
  m.pixel_decoder.embed = get_linear(t, "pixel_decoder.embed", -1, 2 * c + 3 * spec.tap_width());
  spec.pixel_hidden = static_cast<int>(m.pixel_decoder.embed.weight.rows());
  m.pixel_decoder.pixel = get_linear(t, "pixel_decoder.pixel", -1, spec.pixel_hidden);
  spec.mask_dim = static_cast<int>(m.pixel_decoder.pixel.weight.rows());
  m.pixel_decoder.activation = spec.pixel_activation;

  m.query_embed = matrix_from_tensor(t, "decoder.query_embed");
  const long d = m.query_embed.cols();
  spec.decoder.num_queries = static_cast<int>(m.query_embed.rows());
  spec.decoder.embed_dim = static_cast<int>(d);
  if (d % spec.decoder.num_heads != 0) {
    fail(ErrorKind::kFixture, "decoder width " + std::to_string(d) +
                                  " is not divisible by the head count");
  }
  m.decoder.input_proj = get_linear(t, "decoder.input_proj", d, c);
  int layers = 0;
  while (t.count("decoder.layers." + std::to_string(layers) + ".ffn1.weight") != 0) ++layers;
  if (layers == 0) fail(ErrorKind::kFixture, "fixture has no decoder layers");
  spec.decoder.num_layers = layers;
  for (int l = 0; l < layers; ++l) {
    const std::string p = "decoder.layers." + std::to_string(l);
    DecoderLayerParams layer;
    layer.self_attn = get_attention(t, p + ".self_attn", d, spec.decoder.num_heads);
    layer.cross_attn = get_attention(t, p + ".cross_attn", d, spec.decoder.num_heads);
    layer.ffn1 = get_linear(t, p + ".ffn1", -1, d);
    layer.ffn2 = get_linear(t, p + ".ffn2", d, layer.ffn1.weight.rows());
    layer.norm1 = get_norm(t, p + ".norm1", d);
    layer.norm2 = get_norm(t, p + ".norm2", d);
    layer.norm3 = get_norm(t, p + ".norm3", d);
    if (l == 0) spec.decoder.ffn_dim = static_cast<int>(layer.ffn1.weight.rows());
    m.decoder.layers.push_back(std::move(layer));
  }
  m.decoder.final_norm = get_norm(t, "decoder.norm", d);
  m.decoder.class_head = get_linear(t, "decoder.class_head", spec.num_classes + 1, d);
  m.decoder.mask_head = get_linear(t, "decoder.mask_head", spec.mask_dim, d);
  for (std::size_t k = 0; k < m.deep_b.size(); ++k) {
    m.deep_b[k] =
        get_linear(t, "aux.deepb." + std::to_string(k), spec.num_classes, spec.tap_width());
  }
  return m;
}

ModelFixture load_fixture(const std::filesystem::path& path, int expected_num_classes) {
  return fixture_from_tensors(read_tensor_file(path), expected_num_classes);
}

void save_fixture(const std::filesystem::path& path, const ModelFixture& fixture) {
  write_tensor_file(path, fixture_to_tensors(fixture));
}

FeatureMap range_input(const RangeImage& img, const Vector& input_scale) {
  if (input_scale.size() != kNumRangeChannels) {
    fail(ErrorKind::kFixture, "input scale needs one entry per range channel");
  }
  const int h = img.geometry.height;
  const int w = img.geometry.width;
  FeatureMap in(kNumRangeChannels, h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!img.valid(v, u)) continue;
      for (int c = 0; c < kNumRangeChannels; ++c) {
        in.at(c, v, u) = static_cast<double>(img.channel(v, u, c)) * input_scale[c];
      }
    }
  }
  return in;
}

std::array<FeatureMap, 5> backbone_features(const ModelFixture& m, const FeatureMap& input) {
  if (input.height % 8 != 0 || input.width % 8 != 0) {
    fail(ErrorKind::kFixture, "range image " + std::to_string(input.height) + "x" +
                                  std::to_string(input.width) +
                                  " does not divide into the 1/8 pyramid level");
  }
  std::array<FeatureMap, 5> x;
  x[0] = relu_linear(input, m.stem[0]);
  x[1] = relu_linear(x[0], m.stem[1]);
  for (std::size_t i = 2; i < x.size(); ++i) x[i] = relu_linear(avg_pool2(x[i - 1]), m.stem[i]);
  return x;
}

FrameOutputs forward_frame(const ModelFixture& m, const RangeImage& img) {
  const std::array<FeatureMap, 5> x = backbone_features(m, range_input(img, m.input_scale));
  const PixelEmbeddings pixels = fid_decode(x, m.pixel_decoder, m.spec.upsample);
  QueryOutputs q = decoder_forward(m.query_embed, flatten_tokens(x[4]), m.spec.decoder, m.decoder);
  return {std::move(q.class_logits), predict_masks(q.mask_embeddings, pixels.final)};
}

}  // namespace rangeseg
