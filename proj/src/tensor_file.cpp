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

#include "rangeseg/tensor_file.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rangeseg/error.hpp"

namespace rangeseg {
namespace {

constexpr char kMagic[4] = {'R', 'S', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T byteswap_if_needed(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  v = byteswap_if_needed(v);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f32(std::string& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, sizeof v);
    return byteswap_if_needed(v);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void take(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::kFixture, source_ + ": truncated tensor file");
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string dims_text(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (t.values.size() != t.numel()) {
      fail(ErrorKind::kShape, "tensor " + name + " holds " + std::to_string(t.values.size()) +
                                  " values for shape " + dims_text(t.dims));
    }
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    for (float f : t.values) put_f32(out, f);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kFixture, "cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) fail(ErrorKind::kFixture, "short write to " + path.string());
}

TensorMap read_tensor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kFixture, "cannot open fixture " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Reader r(bytes, path.string());
  if (r.str(4) != std::string(kMagic, 4)) {
    fail(ErrorKind::kFixture, path.string() + ": not a tensor file");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    fail(ErrorKind::kFixture, path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  TensorMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    Tensor t;
    t.dims.resize(r.u32());
    for (auto& d : t.dims) d = r.u32();
    t.values.resize(t.numel());
    for (float& f : t.values) f = r.f32();
    if (!out.emplace(name, std::move(t)).second) {
      fail(ErrorKind::kFixture, path.string() + ": duplicate tensor " + name);
    }
  }
  if (!r.done()) fail(ErrorKind::kFixture, path.string() + ": trailing bytes");
  return out;
}

Tensor tensor_from_matrix(const Matrix& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.values.push_back(static_cast<float>(m(i, j)));
  }
  return t;
}

Tensor tensor_from_vector(const Vector& v) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  for (Eigen::Index i = 0; i < v.size(); ++i) t.values.push_back(static_cast<float>(v[i]));
  return t;
}

Tensor tensor_from_scalar(double value) { return Tensor{{}, {static_cast<float>(value)}}; }

const Tensor& require_tensor(const TensorMap& tensors, const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) fail(ErrorKind::kFixture, "fixture lacks tensor " + name);
  return it->second;
}

Matrix matrix_from_tensor(const TensorMap& tensors, const std::string& name, long rows,
                          long cols) {
  const Tensor& t = require_tensor(tensors, name);
  if (t.dims.size() != 2 || (rows >= 0 && t.dims[0] != static_cast<std::uint32_t>(rows)) ||
      (cols >= 0 && t.dims[1] != static_cast<std::uint32_t>(cols))) {
    fail(ErrorKind::kFixture, "tensor " + name + " has shape " + dims_text(t.dims) +
                                  ", expected [" + (rows >= 0 ? std::to_string(rows) : "*") +
                                  ", " + (cols >= 0 ? std::to_string(cols) : "*") + "]");
  }
  Matrix m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t.values[k++];
  }
  return m;
}

Vector vector_from_tensor(const TensorMap& tensors, const std::string& name, long size) {
  const Tensor& t = require_tensor(tensors, name);
  if (t.dims.size() != 1 || (size >= 0 && t.dims[0] != static_cast<std::uint32_t>(size))) {
    fail(ErrorKind::kFixture, "tensor " + name + " has shape " + dims_text(t.dims) +
                                  ", expected [" + (size >= 0 ? std::to_string(size) : "*") +
                                  "]");
  }
  Vector v(t.dims[0]);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = t.values[static_cast<std::size_t>(i)];
  return v;
}

double scalar_from_tensor(const TensorMap& tensors, const std::string& name) {
  const Tensor& t = require_tensor(tensors, name);
  if (!t.dims.empty()) fail(ErrorKind::kFixture, "tensor " + name + " must be a scalar");
  return t.values[0];
}

}  // namespace rangeseg
