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

#include <cstddef>
#include <vector>

namespace rangeseg {

/// Row-major H×W grid of values.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t index(int v, int u) const {
    return static_cast<std::size_t>(v) * width + u;
  }
  T& at(int v, int u) { return data[index(v, u)]; }
  const T& at(int v, int u) const { return data[index(v, u)]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Grid&) const = default;
};

using LabelImage = Grid<int>;

}  // namespace rangeseg
