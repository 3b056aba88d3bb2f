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

#include "caddelag/runtime.hpp"

namespace caddelag {

nlohmann::json StageMetrics::to_json() const {
  return {{"stage", stage},
          {"tasks", tasks},
          {"workers", workers},
          {"blocks_read", blocks_read},
          {"blocks_written", blocks_written},
          {"bytes_read", bytes_read},
          {"bytes_written", bytes_written},
          {"wall_time_s", wall_time_s}};
}

Runtime::Runtime(std::filesystem::path scratch, std::size_t workers)
    : scratch_(std::move(scratch)), workers_(workers) {
  if (workers_ == 0) throw Error(ErrorCode::kInvalidArgument, "worker count must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(scratch_, ec);
  if (ec)
    throw Error(ErrorCode::kIo,
                fmt::format("cannot create scratch root {}: {}", scratch_.string(), ec.message()));
}

void Runtime::set_scratch(std::filesystem::path scratch) {
  std::error_code ec;
  std::filesystem::create_directories(scratch, ec);
  if (ec)
    throw Error(ErrorCode::kIo,
                fmt::format("cannot create scratch root {}: {}", scratch.string(), ec.message()));
  scratch_ = std::move(scratch);
}

void Runtime::set_workers(std::size_t workers) {
  if (workers == 0) throw Error(ErrorCode::kInvalidArgument, "worker count must be >= 1");
  workers_ = workers;
}

std::string Runtime::temp_name(std::string_view tag) {
  for (;;) {
    std::string name = fmt::format("_tmp_{:06d}_{}", temp_counter_++, tag);
    if (!std::filesystem::exists(scratch_ / name)) return name;
  }
}

void Runtime::record(const StageMetrics& m) {
  history_.push_back(m);
  if (metrics_os_) *metrics_os_ << m.to_json().dump() << '\n' << std::flush;
}

}  // namespace caddelag
