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

#include "rangeseg/error.hpp"

namespace rangeseg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kDataset: return "dataset error";
    case ErrorKind::kPairing: return "pairing error";
    case ErrorKind::kFixture: return "fixture error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kMalformed: return "malformed input";
    case ErrorKind::kCorrupt: return "corrupt data";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kState: return "state error";
  }
  return "error";
}

}  // namespace rangeseg
