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

#include "caddelag/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "caddelag/error.hpp"

namespace caddelag {

void RunConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (workers < 1) bad("workers must be >= 1");
  if (!(eps_rp > 0.0 && eps_rp < 1.0)) bad(fmt::format("eps must be in (0, 1), got {}", eps_rp));
  if (!(delta > 0.0 && delta < 1.0)) bad(fmt::format("delta must be in (0, 1), got {}", delta));
  if (d < 1 || d > 30) bad(fmt::format("d must be in [1, 30], got {}", d));
  if (top_k < 1) bad("top-k must be >= 1");
}

std::size_t RunConfig::effective_block_size(std::size_t n) const {
  if (block_size) return block_size;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

nlohmann::json RunConfig::to_json() const {
  return {{"workers", workers}, {"block_size", block_size}, {"eps_rp", eps_rp}, {"delta", delta},
          {"d", d},             {"seed", seed},             {"top_k", top_k}};
}

std::filesystem::path resolve_scratch(const std::filesystem::path& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CADDELAG_SCRATCH"); env && *env) return env;
  throw Error(ErrorCode::kInvalidArgument, "no scratch root: pass --scratch or set CADDELAG_SCRATCH");
}

}  // namespace caddelag
