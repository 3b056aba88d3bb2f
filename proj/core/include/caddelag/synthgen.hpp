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

// Synthetic snapshot pairs with planted inter-cluster anomalies, and a
// Gaussian-kernel graph builder for feature vectors.
//
// Points come from an equal-weight 2-D Gaussian mixture. A1(i,j) =
// exp(-|p_i - p_j|), Q is the same kernel on noise-perturbed points, R(i,j)
// is nonzero with probability `flip_prob` (uniform on [0,1)), and
// A2 = Q + (R + R^T) / 2.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "caddelag/blockops.hpp"

namespace caddelag {

struct SyntheticSpec {
  std::size_t n = 500;
  std::vector<std::array<double, 2>> means = {{3, 3}, {3, -3}, {-3, 3}, {-3, -3}};
  double stddev = 1.0;  // isotropic mixture covariance stddev^2 I
  double noise = 0.3;   // perturbation stddev for Q
  double flip_prob = 0.05;
  std::uint64_t seed = 0;
  std::size_t block_size = 0;  // 0 picks ceil(sqrt(n))

  std::size_t components() const { return means.size(); }
  std::size_t effective_block_size() const;
  void validate() const;
  nlohmann::json to_json() const;
};

struct GroundTruth {
  std::vector<std::size_t> clusters;
  /// Unordered pairs (i < j) in different clusters with R(i,j) or R(j,i) nonzero.
  std::vector<std::array<std::size_t, 2>> anomalous_edges;
  std::vector<std::size_t> anomalous_nodes;
  /// Per node, sum of (R + R^T)/2 over its anomalous edges.
  std::vector<double> planted_mass;
  bool identical_graphs = false;

  bool no_planted_anomalies() const { return anomalous_edges.empty(); }
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

struct SyntheticPair {
  MatrixHandle a1;
  MatrixHandle a2;
  Eigen::MatrixXd points1;  // n x 2
  Eigen::MatrixXd points2;
  GroundTruth truth;
};

/// Mixture samples and cluster labels for `spec` (no graphs written).
void sample_points(const SyntheticSpec& spec, Eigen::MatrixXd& points,
                   std::vector<std::size_t>& labels, Eigen::MatrixXd& perturbed);

/// Value of R(i, j) (ordered pair); zero on the diagonal.
double planted_value(const SyntheticSpec& spec, std::size_t i, std::size_t j);

/// Writes `<scratch>/<name1>` and `<scratch>/<name2>`.
SyntheticPair generate_pair(Runtime& rt, const SyntheticSpec& spec, const std::string& name1 = "g1",
                            const std::string& name2 = "g2");

/// exp(-|p_i - p_j|^2 / (2 sigma^2)) off the diagonal; rows of `points` are
/// feature vectors.
MatrixHandle kernel_graph(Runtime& rt, const std::string& name, const Eigen::MatrixXd& points,
                          double sigma, std::size_t block_size);

}  // namespace caddelag
