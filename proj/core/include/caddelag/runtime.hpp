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

// Fixed-size worker pool executing one stage of per-key tasks at a time.
//
// A stage is a barrier: run_stage() returns only after every task finished.
// Keys are dispatched in canonical (sorted) order and results are returned in
// that same order, so anything reduced over them is independent of the
// number of workers.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "caddelag/blockstore.hpp"
#include "caddelag/error.hpp"

namespace caddelag {

/// Placeholder result for tasks that only write blocks.
using Unit = std::monostate;

struct StageMetrics {
  std::string stage;
  std::size_t tasks = 0;
  std::size_t workers = 0;
  std::uint64_t blocks_read = 0;
  std::uint64_t blocks_written = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
};

/// Thrown when a task fails; carries the code of the underlying error.
class TaskFailure : public Error {
 public:
  TaskFailure(ErrorCode code, std::string stage, std::string key, const std::string& cause)
      : Error(code, fmt::format("stage '{}' aborted at task {}: {}", stage, key, cause)),
        stage_(std::move(stage)),
        key_(std::move(key)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string stage_;
  std::string key_;
};

namespace detail {

template <typename Key>
std::string describe_key(const Key& k) {
  if constexpr (std::is_integral_v<Key>) {
    return std::to_string(k);
  } else {
    return to_string(k);
  }
}

class CountingSink final : public io::Sink {
 public:
  void on_read(std::size_t bytes) override {
    blocks_read.fetch_add(1, std::memory_order_relaxed);
    bytes_read.fetch_add(bytes, std::memory_order_relaxed);
  }
  void on_write(std::size_t bytes) override {
    blocks_written.fetch_add(1, std::memory_order_relaxed);
    bytes_written.fetch_add(bytes, std::memory_order_relaxed);
  }

  std::atomic<std::uint64_t> blocks_read{0};
  std::atomic<std::uint64_t> blocks_written{0};
  std::atomic<std::uint64_t> bytes_read{0};
  std::atomic<std::uint64_t> bytes_written{0};
};

}  // namespace detail

/// Sorts keys into canonical order (row-major for BlockId).
template <typename Key>
std::vector<Key> deterministic_order(std::vector<Key> keys) {
  std::sort(keys.begin(), keys.end());
  return keys;
}

template <typename Key, typename Result>
class TaskSet {
 public:
  using Fn = std::function<Result(const Key&)>;

  TaskSet(std::string stage, std::vector<Key> keys, Fn fn)
      : stage_(std::move(stage)), keys_(deterministic_order(std::move(keys))), fn_(std::move(fn)) {
    auto dup = std::adjacent_find(keys_.begin(), keys_.end());
    if (dup != keys_.end())
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("stage '{}': duplicate task key {}", stage_, detail::describe_key(*dup)));
    if (!fn_) throw Error(ErrorCode::kInvalidArgument, "task function is empty");
  }

  const std::string& stage() const { return stage_; }
  const std::vector<Key>& keys() const { return keys_; }
  const Fn& fn() const { return fn_; }

 private:
  std::string stage_;
  std::vector<Key> keys_;
  Fn fn_;
};

template <typename Key, typename Result>
struct StageResult {
  std::vector<Key> keys;       // canonical order
  std::vector<Result> results; // aligned with keys
  StageMetrics metrics;

  const Result& at(const Key& k) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), k);
    if (it == keys.end() || *it != k)
      throw Error(ErrorCode::kInvalidArgument, "no result for key " + detail::describe_key(k));
    return results[static_cast<std::size_t>(it - keys.begin())];
  }
};

/// Executes every task exactly once on `workers` threads and waits for all of
/// them. The first failure (in canonical key order among failures observed)
/// stops dispatch and is rethrown as TaskFailure.
template <typename Key, typename Result>
StageResult<Key, Result> run_stage(std::size_t workers, const TaskSet<Key, Result>& tasks) {
  if (workers == 0) throw Error(ErrorCode::kInvalidArgument, "worker count must be >= 1");
  const auto& keys = tasks.keys();
  const std::size_t n = keys.size();

  std::vector<std::optional<Result>> slots(n);
  detail::CountingSink sink;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::size_t err_index = std::numeric_limits<std::size_t>::max();
  std::string err_msg;
  ErrorCode err_code = ErrorCode::kTaskFailed;

  auto drain = [&] {
    io::ScopedSink scoped(&sink);
    while (!failed.load(std::memory_order_acquire)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        slots[i].emplace(tasks.fn()(keys[i]));
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err_msg = e.what();
          const auto* ce = dynamic_cast<const Error*>(&e);
          err_code = ce ? ce->code() : ErrorCode::kTaskFailed;
        }
        failed.store(true, std::memory_order_release);
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  const std::size_t threads = std::min(workers, std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  }
  const auto stop = std::chrono::steady_clock::now();

  if (failed.load()) throw TaskFailure(err_code, tasks.stage(), detail::describe_key(keys[err_index]), err_msg);

  StageResult<Key, Result> out;
  out.keys = keys;
  out.results.reserve(n);
  for (auto& s : slots) out.results.push_back(std::move(*s));
  out.metrics.stage = tasks.stage();
  out.metrics.tasks = n;
  out.metrics.workers = workers;
  out.metrics.blocks_read = sink.blocks_read.load();
  out.metrics.blocks_written = sink.blocks_written.load();
  out.metrics.bytes_read = sink.bytes_read.load();
  out.metrics.bytes_written = sink.bytes_written.load();
  out.metrics.wall_time_s = std::chrono::duration<double>(stop - start).count();
  return out;
}

/// Execution context shared by the block algebra: scratch root, worker count,
/// and the per-stage metrics log.
class Runtime {
 public:
  Runtime(std::filesystem::path scratch, std::size_t workers);

  const std::filesystem::path& scratch() const { return scratch_; }
  std::size_t workers() const { return workers_; }
  /// Redirects where new matrices are created; see ScratchOverride.
  void set_scratch(std::filesystem::path scratch);
  void set_workers(std::size_t workers);

  /// Every metrics record is also written as one JSON line to `os`, if set.
  void set_metrics_stream(std::ostream* os) { metrics_os_ = os; }
  const std::vector<StageMetrics>& history() const { return history_; }
  void clear_history() { history_.clear(); }

  /// Unused matrix name under the scratch root, e.g. `_tmp_000007_square`.
  std::string temp_name(std::string_view tag);

  template <typename Key, typename Result>
  StageResult<Key, Result> run(const TaskSet<Key, Result>& tasks) {
    auto result = run_stage(workers_, tasks);
    record(result.metrics);
    return result;
  }

  void record(const StageMetrics& m);

 private:
  std::filesystem::path scratch_;
  std::size_t workers_;
  std::ostream* metrics_os_ = nullptr;
  std::vector<StageMetrics> history_;
  std::size_t temp_counter_ = 0;
};

/// Temporarily points a runtime at another output directory.
class ScratchOverride {
 public:
  ScratchOverride(Runtime& rt, std::filesystem::path dir) : rt_(rt), saved_(rt.scratch()) {
    rt_.set_scratch(std::move(dir));
  }
  ~ScratchOverride() {
    try {
      rt_.set_scratch(saved_);
    } catch (...) {
    }
  }
  ScratchOverride(const ScratchOverride&) = delete;
  ScratchOverride& operator=(const ScratchOverride&) = delete;

 private:
  Runtime& rt_;
  std::filesystem::path saved_;
};

}  // namespace caddelag
