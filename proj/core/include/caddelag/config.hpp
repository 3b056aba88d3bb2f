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

#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace caddelag {

/// Shared run parameters for the command-line tools.
struct RunConfig {
  std::filesystem::path scratch;
  std::size_t workers = 1;
  std::size_t block_size = 0;  // 0: ceil(sqrt(n))
  double eps_rp = 1e-3;
  double delta = 5e-5;  // ceil(ln(1/delta)) = 10 refinement steps
  std::size_t d = 3;
  std::uint64_t seed = 0;
  std::size_t top_k = 100;

  /// Throws kInvalidArgument on any out-of-range field.
  void validate() const;
  std::size_t effective_block_size(std::size_t n) const;
  nlohmann::json to_json() const;
};

/// `flag` if non-empty, else $CADDELAG_SCRATCH, else throws.
std::filesystem::path resolve_scratch(const std::filesystem::path& flag);

}  // namespace caddelag
