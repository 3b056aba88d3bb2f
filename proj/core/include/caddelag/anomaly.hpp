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

// Change scoring between two snapshots over a fixed node set:
//   dE(i,j) = |A1(i,j) - A2(i,j)| * |c1(i,j) - c2(i,j)|,  F_i = sum_j dE(i,j)
// where c_t = V_t * ||Z_t,i - Z_t,j||^2 is the embedded commute time.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caddelag/blockops.hpp"
#include "caddelag/embedding.hpp"

namespace caddelag {

struct GraphPair {
  MatrixHandle a1;
  MatrixHandle a2;
  double v1 = 0.0;
  double v2 = 0.0;
};

/// Validates both adjacencies and their compatibility; computes volumes.
GraphPair make_graph_pair(Runtime& rt, const MatrixHandle& a1, const MatrixHandle& a2);

struct DeltaEOptions {
  /// |A1 - A2| <= tolerance counts as unchanged. 0 means exact inequality.
  double tolerance = 0.0;
  /// Compute distances for every pair instead of skipping unchanged ones.
  bool dense_path = false;
};

/// Throws kProvenance unless z1 / z2 were built from gp.a1 / gp.a2.
void check_provenance(const GraphPair& gp, const Embedding& z1, const Embedding& z2);

Block delta_e_block(const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                    const BlockId& id, const DeltaEOptions& opts = {});

/// Writes the full dE matrix, one task per block.
MatrixHandle delta_e(Runtime& rt, const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                     const DeltaEOptions& opts = {}, const std::string& out_name = {});

/// Row sums of dE, reduced in canonical block order.
DenseVector node_scores(Runtime& rt, const MatrixHandle& de);

struct RankedNode {
  std::size_t id = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct ScoredEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double delta_e = 0.0;
};

/// Descending score; ties by ascending index.
std::vector<RankedNode> top_k(const DenseVector& f, std::size_t k);

/// Largest upper-triangle entries of dE; ties by (i, j).
std::vector<ScoredEdge> top_edges(Runtime& rt, const MatrixHandle& de, std::size_t k);

struct AnomalyReport {
  nlohmann::json parameters;
  DenseVector scores;
  std::vector<RankedNode> nodes;
  std::vector<ScoredEdge> edges;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

struct DetectOptions {
  std::size_t top_nodes = 100;
  std::size_t top_edges = 100;
  DeltaEOptions delta;
};

/// Full scoring pass; the dE matrix is a scratch temporary.
AnomalyReport detect(Runtime& rt, const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                     const DetectOptions& opts = {});

}  // namespace caddelag
