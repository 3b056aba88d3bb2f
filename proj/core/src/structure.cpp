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

#include "caddelag/structure.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "caddelag/blockops.hpp"
#include "caddelag/error.hpp"

namespace caddelag {

namespace {

// Union-find that tracks the parity of each node relative to its root.
class ParityForest {
 public:
  explicit ParityForest(std::size_t n) : parent_(n), parity_(n, 0), conflict_(n, false) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::pair<std::size_t, std::uint8_t> find(std::size_t x) {
    std::uint8_t par = 0;
    std::size_t r = x;
    while (parent_[r] != r) {
      par ^= parity_[r];
      r = parent_[r];
    }
    // Path compression with parity fix-up.
    std::uint8_t acc = par;
    while (parent_[x] != r) {
      const std::size_t next = parent_[x];
      const std::uint8_t old = parity_[x];
      parent_[x] = r;
      parity_[x] = acc;
      acc ^= old;
      x = next;
    }
    return {r, par};
  }

  // Constrains x and y to opposite sides. Returns true if it joined two trees.
  bool unite(std::size_t x, std::size_t y) {
    auto [rx, px] = find(x);
    auto [ry, py] = find(y);
    if (rx == ry) {
      if (px == py) conflict_[rx] = true;
      return false;
    }
    parent_[ry] = rx;
    parity_[ry] = static_cast<std::uint8_t>(px ^ py ^ 1);
    conflict_[rx] = conflict_[rx] || conflict_[ry];
    return true;
  }

  bool conflict(std::size_t root) const { return conflict_[root]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> parity_;
  std::vector<bool> conflict_;
};

struct BlockForest {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // global node ids
  std::vector<std::size_t> odd_nodes;  // one global node per local odd-cycle component
};

}  // namespace

nlohmann::json GraphStructure::to_json() const {
  return {{"nodes", nodes},
          {"components", components},
          {"isolated_nodes", isolated_nodes},
          {"connected", connected()},
          {"has_bipartite_component", has_bipartite_component}};
}

AdjacencyCheck check_adjacency(Runtime& rt, const MatrixHandle& a, double tolerance) {
  require_square(a, "check_adjacency");
  std::vector<BlockId> upper;
  for (const BlockId& id : a.meta.block_ids())
    if (id.row <= id.col) upper.push_back(id);
  TaskSet<BlockId, AdjacencyCheck> tasks("check_adjacency:" + a.name(), upper, [&](const BlockId& id) {
    AdjacencyCheck c;
    const Block x = read_block(a, id);
    const Block y = id.row == id.col ? x : read_block(a, {id.col, id.row});
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t s = 0; s < x.cols; ++s) {
        const double v = x(r, s), w = y(s, r);
        if (v < 0.0 || w < 0.0) c.non_negative = false;
        const double diff = std::fabs(v - w);
        c.max_asymmetry = std::max(c.max_asymmetry, diff);
        if (diff > tolerance) c.symmetric = false;
        if (id.row == id.col && r == s && v != 0.0) c.zero_diagonal = false;
      }
    }
    return c;
  });
  AdjacencyCheck total;
  for (const auto& c : rt.run(tasks).results) {
    total.symmetric = total.symmetric && c.symmetric;
    total.zero_diagonal = total.zero_diagonal && c.zero_diagonal;
    total.non_negative = total.non_negative && c.non_negative;
    total.max_asymmetry = std::max(total.max_asymmetry, c.max_asymmetry);
  }
  return total;
}

void require_adjacency(Runtime& rt, const MatrixHandle& a, const char* what) {
  const AdjacencyCheck c = check_adjacency(rt, a);
  if (!c.symmetric)
    throw Error(ErrorCode::kAsymmetric,
                fmt::format("{}: '{}' is not symmetric (max |A-A^T| = {})", what, a.name(),
                            c.max_asymmetry));
  if (!c.zero_diagonal)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: '{}' has a nonzero diagonal (self-edges)", what, a.name()));
  if (!c.non_negative)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: '{}' has negative weights", what, a.name()));
}

GraphStructure analyze_structure(Runtime& rt, const MatrixHandle& a) {
  require_square(a, "analyze_structure");
  const std::size_t n = a.n_rows();
  TaskSet<BlockId, BlockForest> tasks("structure:" + a.name(), a.meta.block_ids(), [&](const BlockId& id) {
    const Block x = read_block(a, id);
    const std::size_t r0 = a.meta.row_offset(id.row), c0 = a.meta.col_offset(id.col);
    // Local ids: rows first, then columns (a diagonal block maps both to rows).
    const bool diag = id.row == id.col;
    ParityForest local(diag ? x.rows : x.rows + x.cols);
    BlockForest out;
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t s = 0; s < x.cols; ++s) {
        if (x(r, s) == 0.0) continue;
        const std::size_t u = r, v = diag ? s : x.rows + s;
        if (u == v) continue;
        if (local.unite(u, v)) out.edges.emplace_back(r0 + r, c0 + s);
      }
    // An odd cycle inside the block shows up as a parity conflict. Only
    // diagonal blocks can have one: off-diagonal row and column sets are disjoint.
    const std::size_t locals = diag ? x.rows : x.rows + x.cols;
    for (std::size_t t = 0; t < locals; ++t) {
      const std::size_t root = local.find(t).first;
      if (root == t && local.conflict(root))
        out.odd_nodes.push_back(diag || t < x.rows ? r0 + t : c0 + (t - x.rows));
    }
    return out;
  });
  const auto res = rt.run(tasks);

  ParityForest global(n);
  std::vector<bool> touched(n, false);
  for (const BlockForest& f : res.results) {
    for (auto [u, v] : f.edges) {
      global.unite(u, v);
      touched[u] = touched[v] = true;
    }
  }
  GraphStructure s;
  s.nodes = n;
  std::unordered_map<std::size_t, bool> comp_conflict;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = global.find(v).first;
    comp_conflict.try_emplace(root, global.conflict(root));
    if (!touched[v]) ++s.isolated_nodes;
  }
  s.components = comp_conflict.size();
  for (const BlockForest& f : res.results)
    for (std::size_t v : f.odd_nodes) comp_conflict[global.find(v).first] = true;
  for (std::size_t v = 0; v < n; ++v) {
    if (!touched[v]) continue;
    if (!comp_conflict[global.find(v).first]) {
      s.has_bipartite_component = true;
      break;
    }
  }
  return s;
}

}  // namespace caddelag
