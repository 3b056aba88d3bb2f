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

// Commute-time embedding by random projection of the weighted incidence
// matrix. Squared row distances of Z approximate effective resistances;
// multiplying by the graph volume gives commute times.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "caddelag/blockops.hpp"
#include "caddelag/sdd_solver.hpp"
#include "caddelag/structure.hpp"

namespace caddelag {

/// ceil(ln(n / eps)). Requires n / eps > 1.
std::size_t k_rp(double n, double eps);

/// The Rademacher value q_e / (1/sqrt(k)) in {+1, -1} for edge (u, v),
/// u < v, in projection j. Pure function of its arguments.
int edge_sign(std::uint64_t seed, std::size_t j, std::size_t u, std::size_t v);

/// Y = W^{1/2} B Q for all `k` projections at once (n x k), accumulated from
/// the upper-triangle entries of A without forming B.
Panel project_incidence(Runtime& rt, const MatrixHandle& a, std::uint64_t seed, std::size_t k);

struct EmbeddingParams {
  double eps_rp = 1e-3;
  double delta = 5e-5;
  std::size_t d = 3;
  std::uint64_t seed = 0;
  /// Overrides the k_rp formula when nonzero.
  std::size_t k = 0;
  /// Chain split; chosen from the graph structure when unset.
  std::optional<ChainSplit> split;
  /// Keep the chain directory under the scratch root after solving.
  bool keep_chain = false;

  void validate() const;
  nlohmann::json to_json() const;
};

struct Embedding {
  Panel z;  // n x k_rp, columns mean-centered
  std::string source;
  std::uint64_t seed = 0;
  double eps_rp = 0.0;
  double delta = 0.0;
  std::size_t d = 0;
  double volume = 0.0;  // V_G = sum of degrees
  ChainSplit split = ChainSplit::kStandard;
  GraphStructure structure;

  std::size_t n() const { return static_cast<std::size_t>(z.rows()); }
  std::size_t k_rp() const { return static_cast<std::size_t>(z.cols()); }
  nlohmann::json metadata() const;
};

/// Builds L = D - A and its chain once (unless `chain` is given), then solves
/// L Z = Y for all projections. Disconnected graphs are accepted and flagged
/// in `structure`.
Embedding commute_time_embedding(Runtime& rt, const MatrixHandle& a, const EmbeddingParams& params,
                                 const ChainPreconditioner* chain = nullptr);

/// Stores Z as an n x k_rp block matrix `root/name` (block size `p`) with
/// `embedding.json` beside meta.json.
MatrixHandle save_embedding(Runtime& rt, const Embedding& e, const std::filesystem::path& root,
                            const std::string& name, std::size_t block_size);
Embedding load_embedding(const std::filesystem::path& root, const std::string& name);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// d(i, j) = sum_c (Z(i,c) - Z(j,c))^2 for i in I, j in J.
Block pairwise_distance_block(const Embedding& e, IndexRange rows, IndexRange cols);

/// Squared distance of rows i and j.
inline double squared_distance(const Panel& z, std::size_t i, std::size_t j) {
  return (z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(j))).squaredNorm();
}

}  // namespace caddelag
