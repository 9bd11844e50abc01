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

#include <array>
#include <cstdint>

#include "rangeseg/mask_head.hpp"
#include "rangeseg/range_projection.hpp"
#include "rangeseg/tensor_file.hpp"

namespace rangeseg {

/// Sizes of the desk-scale network used by the batch pipeline. The backbone
/// is a small pointwise stand-in producing the five-level feature pyramid
/// (full, full, 1/2, 1/4, 1/8 resolution) the pixel decoder consumes.
struct ModelSpec {
  int num_classes = 19;
  int stem_channels = 8;
  int tap_channels = 8;  // channels per upsampled tap with DUpsampling
  int pixel_hidden = 16;
  int mask_dim = 16;
  DecoderConfig decoder{2, 8, 16, 2, 32, false};
  UpsampleMode upsample = UpsampleMode::kDUpsampling;
  bool pixel_activation = true;

  int tap_width() const {
    return upsample == UpsampleMode::kDUpsampling ? tap_channels : stem_channels;
  }
  void validate() const;
};

struct ModelFixture {
  ModelSpec spec;
  Vector input_scale;          // per range-image channel
  std::array<Linear, 5> stem;  // one pointwise layer per pyramid level
  PixelDecoderParams pixel_decoder;
  DecoderParams decoder;
  Matrix query_embed;           // Q × C
  std::array<Linear, 3> deep_b;  // auxiliary semantic heads on the taps
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights rounded to float32, so a
/// saved and reloaded fixture is bit-identical to the generated one.
ModelFixture random_fixture(const ModelSpec& spec, std::uint64_t seed);

TensorMap fixture_to_tensors(const ModelFixture& fixture);

/// Rebuilds a fixture, deriving sizes from tensor shapes. Throws a fixture
/// error on missing tensors, inconsistent shapes, or a class count other
/// than `expected_num_classes` (skipped when negative).
ModelFixture fixture_from_tensors(const TensorMap& tensors, int expected_num_classes = -1);

ModelFixture load_fixture(const std::filesystem::path& path, int expected_num_classes = -1);
void save_fixture(const std::filesystem::path& path, const ModelFixture& fixture);

/// 5×H×W network input: scaled x, y, z, remission, range; zero where empty.
FeatureMap range_input(const RangeImage& img, const Vector& input_scale);

std::array<FeatureMap, 5> backbone_features(const ModelFixture& fixture, const FeatureMap& input);

struct FrameOutputs {
  Matrix class_logits;  // Q × (K+1)
  Matrix mask_logits;   // Q × (H*W)
};

/// Backbone, pixel decoder, query decoder and mask prediction for one range
/// image. Throws a fixture error when the image size does not divide by 8.
FrameOutputs forward_frame(const ModelFixture& fixture, const RangeImage& img);

}  // namespace rangeseg
