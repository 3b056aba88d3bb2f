// Copyright 2026 The caddelag Authors.
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

#include "caddelag/error.hpp"

namespace caddelag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kPathCollision: return "path collision";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMissingBlock: return "missing block";
    case ErrorCode::kChecksum: return "checksum mismatch";
    case ErrorCode::kCorrupt: return "corrupt file";
    case ErrorCode::kImmutable: return "immutability violation";
    case ErrorCode::kDimension: return "dimension mismatch";
    case ErrorCode::kNotSdd: return "not diagonally dominant";
    case ErrorCode::kAsymmetric: return "asymmetric input";
    case ErrorCode::kOversized: return "oversized input";
    case ErrorCode::kProvenance: return "provenance mismatch";
    case ErrorCode::kTaskFailed: return "task failed";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSingular: return "singular system";
  }
  return "unknown";
}

}  // namespace caddelag
