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

#include <nlohmann/json.hpp>

#include "caddelag/blockstore.hpp"
#include "caddelag/runtime.hpp"

namespace caddelag {

/// Result of scanning a matrix for the adjacency contract: symmetric,
/// zero diagonal, non-negative, finite.
struct AdjacencyCheck {
  bool symmetric = true;
  bool zero_diagonal = true;
  bool non_negative = true;
  double max_asymmetry = 0.0;

  bool ok() const { return symmetric && zero_diagonal && non_negative; }
};

/// Checks symmetry exactly (A(i,j) == A(j,i)) unless `tolerance` > 0.
AdjacencyCheck check_adjacency(Runtime& rt, const MatrixHandle& a, double tolerance = 0.0);

/// Throws kAsymmetric / kInvalidArgument if `a` is not a valid adjacency.
void require_adjacency(Runtime& rt, const MatrixHandle& a, const char* what);

/// Connected components of the graph with edges A(i,j) != 0, and whether any
/// component with at least one edge is bipartite (its normalized adjacency
/// then has eigenvalue -1).
struct GraphStructure {
  std::size_t nodes = 0;
  std::size_t components = 0;
  std::size_t isolated_nodes = 0;
  bool has_bipartite_component = false;

  bool connected() const { return components == 1; }
  nlohmann::json to_json() const;
};

/// Each block task builds a parity spanning forest of its own edges; forests
/// are merged in canonical block order.
GraphStructure analyze_structure(Runtime& rt, const MatrixHandle& a);

}  // namespace caddelag
