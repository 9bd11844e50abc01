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

#include <fstream>
#include <iterator>

#include "doctest.h"
#include "rangeseg/error.hpp"
#include "rangeseg/model.hpp"
#include "rangeseg/synthetic.hpp"
#include "rangeseg/tensor_file.hpp"
#include "support/oracles.hpp"

using namespace rangeseg;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

void check_kind(const std::function<void()>& fn, ErrorKind kind) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("tensor container round trip and layout") {
  const auto dir = oracle::scratch_dir("tensor_file");
  TensorMap t;
  t["b"] = Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}};
  t["a"] = tensor_from_scalar(0.25);
  write_tensor_file(dir / "t.rstc", t);
  CHECK(read_tensor_file(dir / "t.rstc") == t);

  const std::string bytes = slurp(dir / "t.rstc");
  CHECK(bytes.substr(0, 4) == "RSTC");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);  // count
  // Name order: "a" is written first.
  CHECK(bytes[12] == 1);
  CHECK(bytes[16] == 'a');

  dump(dir / "bad_magic.rstc", "XXXX" + bytes.substr(4));
  check_kind([&] { read_tensor_file(dir / "bad_magic.rstc"); }, ErrorKind::kFixture);
  dump(dir / "short.rstc", bytes.substr(0, bytes.size() - 3));
  check_kind([&] { read_tensor_file(dir / "short.rstc"); }, ErrorKind::kFixture);
  dump(dir / "long.rstc", bytes + "x");
  check_kind([&] { read_tensor_file(dir / "long.rstc"); }, ErrorKind::kFixture);
  check_kind([&] { read_tensor_file(dir / "missing.rstc"); }, ErrorKind::kFixture);

  check_kind([&] { require_tensor(t, "zz"); }, ErrorKind::kFixture);
  check_kind([&] { matrix_from_tensor(t, "b", 3, 2); }, ErrorKind::kFixture);
  const Matrix m = matrix_from_tensor(t, "b", 2, 3);
  CHECK(m(1, 2) == 6.0);
}

TEST_CASE("model fixtures survive a save and load bit-exactly") {
  const auto dir = oracle::scratch_dir("fixture");
  for (UpsampleMode mode : {UpsampleMode::kDUpsampling, UpsampleMode::kInterpolation}) {
    ModelSpec spec;
    spec.upsample = mode;
    const ModelFixture m = random_fixture(spec, 99);
    save_fixture(dir / "f.rstc", m);
    const ModelFixture back = load_fixture(dir / "f.rstc", spec.num_classes);
    CHECK(back.spec.upsample == mode);
    CHECK(fixture_to_tensors(back) == fixture_to_tensors(m));

    const ClassConfig cfg = semantic_kitti_config();
    SensorGeometry g = SensorGeometry::from_degrees(64, 16, 3.0, 25.0);
    SyntheticSceneParams sp;
    sp.azimuth_steps = 128;
    const PointCloud scan = synthetic_scan(cfg, g, sp, 3, 0);
    const RangeImage img = build_range_image(scan, g);
    const FrameOutputs a = forward_frame(m, img);
    const FrameOutputs b = forward_frame(back, img);
    CHECK(a.class_logits == b.class_logits);
    CHECK(a.mask_logits == b.mask_logits);
    CHECK(a.class_logits.rows() == spec.decoder.num_queries);
    CHECK(a.class_logits.cols() == spec.num_classes + 1);
    CHECK(a.mask_logits.cols() == 64 * 16);
    CHECK(a.class_logits.allFinite());
    CHECK(a.mask_logits.allFinite());
  }
}

TEST_CASE("fixture errors") {
  const auto dir = oracle::scratch_dir("fixture_errors");
  const ModelFixture m = random_fixture(ModelSpec{}, 1);
  save_fixture(dir / "f.rstc", m);
  check_kind([&] { load_fixture(dir / "f.rstc", 7); }, ErrorKind::kFixture);

  TensorMap t = fixture_to_tensors(m);
  t.erase("decoder.class_head.weight");
  check_kind([&] { fixture_from_tensors(t); }, ErrorKind::kFixture);

  SensorGeometry g = SensorGeometry::from_degrees(60, 16, 3.0, 25.0);
  const PointCloud scan = synthetic_scan(semantic_kitti_config(), g, SyntheticSceneParams{}, 3, 0);
  const RangeImage img = build_range_image(scan, g);
  check_kind([&] { forward_frame(m, img); }, ErrorKind::kFixture);
}

TEST_CASE("fixture generation is seeded") {
  CHECK(fixture_to_tensors(random_fixture(ModelSpec{}, 4)) ==
        fixture_to_tensors(random_fixture(ModelSpec{}, 4)));
  CHECK(fixture_to_tensors(random_fixture(ModelSpec{}, 4)) !=
        fixture_to_tensors(random_fixture(ModelSpec{}, 5)));
}
