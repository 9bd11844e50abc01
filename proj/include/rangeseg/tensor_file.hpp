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
#include <map>
#include <string>
#include <vector>

#include "rangeseg/loss_kernels.hpp"

namespace rangeseg {

/// Named float32 tensor with row-major layout.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const;
  bool operator==(const Tensor&) const = default;
};

using TensorMap = std::map<std::string, Tensor>;

/// Binary layout, all fields little-endian:
///   "RSTC" | u32 version (1) | u32 count
///   per tensor: u32 name_len | name | u32 ndim | u32 dims[ndim] | f32 values[]
/// Entries are written in name order, so equal maps give equal files.
void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors);

/// Throws a fixture error on a bad magic, version, truncation or trailing bytes.
TensorMap read_tensor_file(const std::filesystem::path& path);

Tensor tensor_from_matrix(const Matrix& m);
Tensor tensor_from_vector(const Vector& v);
Tensor tensor_from_scalar(double value);

/// Lookups that throw a fixture error naming the tensor on a missing entry
/// or a shape mismatch. A negative expected extent accepts any size.
const Tensor& require_tensor(const TensorMap& tensors, const std::string& name);
Matrix matrix_from_tensor(const TensorMap& tensors, const std::string& name, long rows = -1,
                          long cols = -1);
Vector vector_from_tensor(const TensorMap& tensors, const std::string& name, long size = -1);
double scalar_from_tensor(const TensorMap& tensors, const std::string& name);

}  // namespace rangeseg
