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

// Counter-based random numbers (Philox4x32-10). A draw is a pure function of
// (key, counter), so values never depend on thread scheduling or on how a
// matrix is partitioned into blocks.

#include <array>
#include <cstdint>

namespace caddelag {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key);
};

/// Named sub-streams so different consumers of one seed never share counters.
enum class Stream : std::uint32_t {
  kEdgeSign = 1,
  kMixtureLabel = 2,
  kMixturePoint = 3,
  kPerturbation = 4,
  kFlip = 5,
  kMatrixFill = 6,
};

/// Philox keyed by a 64-bit seed and a stream tag.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, Stream stream) : seed_(seed), stream_(stream) {}

  /// Four independent 32-bit words for the coordinate (a, b, c).
  Philox4x32::Counter words(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;

  /// Uniform in [0, 1) with 53 random bits, from words 0-1 of (a, b, c).
  double uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;
  /// Second independent uniform in [0, 1), from words 2-3 of (a, b, c).
  double uniform2(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;

  /// Standard normal pair via Box-Muller from the four words of (a, b, c).
  std::array<double, 2> normal_pair(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  Stream stream_;
};

/// Maps two words to [0, 1).
double unit_interval(std::uint32_t hi, std::uint32_t lo);

}  // namespace caddelag
