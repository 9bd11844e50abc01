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
#include <cmath>
#include <string>

#include "rangeseg/error.hpp"
#include "rangeseg/mask_head.hpp"

namespace rangeseg {
namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

// Source taps along one axis for align_corners = false.
std::vector<Tap> interpolation_taps(int in, int scale) {
  std::vector<Tap> taps(static_cast<std::size_t>(in) * scale);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (static_cast<double>(o) + 0.5) / scale - 0.5;
    src = std::max(src, 0.0);
    const int lo = std::min(static_cast<int>(src), in - 1);
    const int hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, src - lo};
  }
  return taps;
}

FeatureMap concat_channels(std::span<const FeatureMap* const> parts) {
  int channels = 0;
  for (const FeatureMap* p : parts) channels += p->channels;
  FeatureMap out(channels, parts[0]->height, parts[0]->width);
  auto it = out.data.begin();
  for (const FeatureMap* p : parts) it = std::copy(p->data.begin(), p->data.end(), it);
  return out;
}

}  // namespace

FeatureMap bilinear_upsample(const FeatureMap& feature, int scale) {
  if (scale < 1) fail(ErrorKind::kShape, "upsampling scale must be positive");
  if (scale == 1) return feature;
  const auto ys = interpolation_taps(feature.height, scale);
  const auto xs = interpolation_taps(feature.width, scale);
  FeatureMap out(feature.channels, feature.height * scale, feature.width * scale);
  for (int c = 0; c < feature.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      const Tap& ty = ys[static_cast<std::size_t>(y)];
      for (int x = 0; x < out.width; ++x) {
        const Tap& tx = xs[static_cast<std::size_t>(x)];
        const double top = (1.0 - tx.frac) * feature.at(c, ty.lo, tx.lo) +
                           tx.frac * feature.at(c, ty.lo, tx.hi);
        const double bottom = (1.0 - tx.frac) * feature.at(c, ty.hi, tx.lo) +
                              tx.frac * feature.at(c, ty.hi, tx.hi);
        out.at(c, y, x) = (1.0 - ty.frac) * top + ty.frac * bottom;
      }
    }
  }
  return out;
}

FeatureMap pointwise_linear(const FeatureMap& feature, const Matrix& weight, const Vector* bias) {
  if (weight.cols() != feature.channels) {
    fail(ErrorKind::kShape, "1x1 projection expects " + std::to_string(weight.cols()) +
                                " channels, got " + std::to_string(feature.channels));
  }
  FeatureMap out(static_cast<int>(weight.rows()), feature.height, feature.width);
  out.matrix() = weight * feature.matrix();
  if (bias != nullptr && bias->size() == weight.rows()) out.matrix().colwise() += *bias;
  return out;
}

FeatureMap pixel_shuffle(const FeatureMap& feature, int s) {
  if (s < 1 || feature.channels % (s * s) != 0) {
    fail(ErrorKind::kShape, "channel count not divisible by the squared upscale factor");
  }
  const int out_c = feature.channels / (s * s);
  FeatureMap out(out_c, feature.height * s, feature.width * s);
  for (int c = 0; c < out_c; ++c) {
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        const int src_c = c * s * s + i * s + j;
        for (int y = 0; y < feature.height; ++y) {
          for (int x = 0; x < feature.width; ++x) {
            out.at(c, y * s + i, x * s + j) = feature.at(src_c, y, x);
          }
        }
      }
    }
  }
  return out;
}

FeatureMap pixel_unshuffle(const FeatureMap& feature, int s) {
  if (s < 1 || feature.height % s != 0 || feature.width % s != 0) {
    fail(ErrorKind::kShape, "spatial size not divisible by the downscale factor");
  }
  FeatureMap out(feature.channels * s * s, feature.height / s, feature.width / s);
  for (int c = 0; c < feature.channels; ++c) {
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        const int dst_c = c * s * s + i * s + j;
        for (int y = 0; y < out.height; ++y) {
          for (int x = 0; x < out.width; ++x) {
            out.at(dst_c, y, x) = feature.at(c, y * s + i, x * s + j);
          }
        }
      }
    }
  }
  return out;
}

FeatureMap dupsample(const FeatureMap& feature, const Matrix& weight, int s) {
  if (s < 1 || weight.rows() % (static_cast<Eigen::Index>(s) * s) != 0) {
    fail(ErrorKind::kShape, "DUpsampling weight rows must be a multiple of s^2");
  }
  return pixel_shuffle(pointwise_linear(feature, weight), s);
}

PixelEmbeddings fid_decode(const std::array<FeatureMap, 5>& features,
                           const PixelDecoderParams& params, UpsampleMode mode) {
  const int h = features[0].height;
  const int w = features[0].width;
  if (features[1].height != h || features[1].width != w) {
    fail(ErrorKind::kShape, "x0 and x1 must share the full resolution");
  }
  PixelEmbeddings out;
  for (int k = 0; k < 3; ++k) {
    const FeatureMap& f = features[static_cast<std::size_t>(k) + 2];
    const int s = 2 << k;
    if (f.height * s != h || f.width * s != w) {
      fail(ErrorKind::kShape, "x" + std::to_string(k + 2) + " is " + std::to_string(f.height) +
                                  "x" + std::to_string(f.width) + ", expected 1/" +
                                  std::to_string(s) + " of " + std::to_string(h) + "x" +
                                  std::to_string(w));
    }
    out.taps.push_back(mode == UpsampleMode::kInterpolation
                           ? bilinear_upsample(f, s)
                           : dupsample(f, params.up_weights[static_cast<std::size_t>(k)], s));
  }
  const FeatureMap* parts[] = {&features[0], &features[1], &out.taps[0], &out.taps[1],
                               &out.taps[2]};
  const FeatureMap cat = concat_channels(parts);
  FeatureMap embeddings = pointwise_linear(cat, params.embed.weight, &params.embed.bias);
  if (params.activation) {
    for (double& v : embeddings.data) v = std::max(v, 0.0);
  }
  out.final = pointwise_linear(embeddings, params.pixel.weight, &params.pixel.bias);
  return out;
}

Matrix predict_masks(const Matrix& mask_embeddings, const FeatureMap& pixel_embeddings) {
  if (mask_embeddings.cols() != pixel_embeddings.channels) {
    fail(ErrorKind::kShape, "mask embeddings have " + std::to_string(mask_embeddings.cols()) +
                                " channels, pixel embeddings " +
                                std::to_string(pixel_embeddings.channels));
  }
  return mask_embeddings * pixel_embeddings.matrix();
}

FeatureMap aux_semantic_logits(const FeatureMap& tap, const Linear& head) {
  return pointwise_linear(tap, head.weight, &head.bias);
}

std::vector<FeatureMap> deep_b_aux(const PixelEmbeddings& pixels, std::span<const Linear> heads) {
  if (heads.size() != pixels.taps.size()) {
    fail(ErrorKind::kShape, "one auxiliary head per pixel-decoder tap required");
  }
  std::vector<FeatureMap> out;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    out.push_back(aux_semantic_logits(pixels.taps[k], heads[k]));
  }
  return out;
}

std::vector<AuxPrediction> deep_a_aux(const QueryOutputs& outputs,
                                      const FeatureMap& pixel_embeddings) {
  std::vector<AuxPrediction> out;
  for (const LayerOutputs& layer : outputs.per_layer) {
    AuxPrediction p;
    p.class_logits = layer.class_logits;
    p.mask_logits = predict_masks(layer.mask_embeddings, pixel_embeddings);
    p.semantic = semantic_inference(p.class_logits, p.mask_logits);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace rangeseg
