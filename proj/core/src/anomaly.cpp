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

#include "caddelag/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>

#include "caddelag/error.hpp"
#include "caddelag/structure.hpp"

namespace caddelag {

namespace {

bool edge_before(const ScoredEdge& x, const ScoredEdge& y) {
  if (x.delta_e != y.delta_e) return x.delta_e > y.delta_e;
  return std::tie(x.i, x.j) < std::tie(y.i, y.j);
}

double total(const DenseVector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void check_one(const MatrixHandle& a, double volume, const Embedding& z, const char* which) {
  if (z.source != a.name())
    throw Error(ErrorCode::kProvenance, fmt::format("embedding {} was built from '{}', not '{}'",
                                                    which, z.source, a.name()));
  if (z.n() != a.n_rows())
    throw Error(ErrorCode::kProvenance,
                fmt::format("embedding {} has {} rows, graph '{}' has {} nodes", which, z.n(),
                            a.name(), a.n_rows()));
  if (std::abs(z.volume - volume) > 1e-9 * std::max(1.0, std::abs(volume)))
    throw Error(ErrorCode::kProvenance,
                fmt::format("embedding {} records volume {}, graph '{}' has {}", which, z.volume,
                            a.name(), volume));
}

}  // namespace

GraphPair make_graph_pair(Runtime& rt, const MatrixHandle& a1, const MatrixHandle& a2) {
  require_same_shape(a1, a2, "graph pair");
  require_square(a1, "graph pair");
  require_adjacency(rt, a1, "graph pair");
  require_adjacency(rt, a2, "graph pair");
  return GraphPair{a1, a2, total(row_sums(rt, a1)), total(row_sums(rt, a2))};
}

void check_provenance(const GraphPair& gp, const Embedding& z1, const Embedding& z2) {
  check_one(gp.a1, gp.v1, z1, "z1");
  check_one(gp.a2, gp.v2, z2, "z2");
}

Block delta_e_block(const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                    const BlockId& id, const DeltaEOptions& opts) {
  const Block b1 = read_block(gp.a1, id);
  const Block b2 = read_block(gp.a2, id);
  const MatrixMeta& meta = gp.a1.meta;
  const std::size_t r0 = meta.row_offset(id.row), c0 = meta.col_offset(id.col);
  Block out(b1.rows, b1.cols);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      const double da_raw = std::abs(b1(r, c) - b2(r, c));
      const bool changed = da_raw > opts.tolerance;
      if (!changed && !opts.dense_path) continue;
      const double da = changed ? da_raw : 0.0;
      const std::size_t u = r0 + r, v = c0 + c;
      const double c1 = gp.v1 * squared_distance(z1.z, u, v);
      const double c2 = gp.v2 * squared_distance(z2.z, u, v);
      out(r, c) = da * std::abs(c1 - c2);
    }
  }
  return out;
}

MatrixHandle delta_e(Runtime& rt, const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                     const DeltaEOptions& opts, const std::string& out_name) {
  check_provenance(gp, z1, z2);
  if (!(opts.tolerance >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "delta_e tolerance must be >= 0");
  MatrixMeta meta = gp.a1.meta;
  meta.name = out_name.empty() ? rt.temp_name("delta_e") : out_name;
  meta.symmetric = true;
  const MatrixHandle out = create_matrix(rt.scratch(), meta);
  TaskSet<BlockId, Unit> tasks("delta_e:" + meta.name, meta.block_ids(), [&](const BlockId& id) {
    write_block(out, id, delta_e_block(gp, z1, z2, id, opts));
    return Unit{};
  });
  rt.run(tasks);
  return out;
}

DenseVector node_scores(Runtime& rt, const MatrixHandle& de) { return row_sums(rt, de); }

std::vector<RankedNode> top_k(const DenseVector& f, std::size_t k) {
  if (k < 1 || k > f.size())
    throw Error(ErrorCode::kInvalidArgument, fmt::format("top_k: k={} outside [1, {}]", k, f.size()));
  std::vector<std::size_t> idx(f.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return f[a] != f[b] ? f[a] > f[b] : a < b; });
  std::vector<RankedNode> out(k);
  for (std::size_t r = 0; r < k; ++r) out[r] = {idx[r], f[idx[r]], r + 1};
  return out;
}

std::vector<ScoredEdge> top_edges(Runtime& rt, const MatrixHandle& de, std::size_t k) {
  std::vector<BlockId> upper;
  for (const BlockId& id : de.meta.block_ids())
    if (id.row <= id.col) upper.push_back(id);
  TaskSet<BlockId, std::vector<ScoredEdge>> tasks(
      "top_edges:" + de.name(), upper, [&](const BlockId& id) {
        const Block b = read_block(de, id);
        const std::size_t r0 = de.meta.row_offset(id.row), c0 = de.meta.col_offset(id.col);
        std::vector<ScoredEdge> cand;
        for (std::size_t r = 0; r < b.rows; ++r)
          for (std::size_t c = 0; c < b.cols; ++c)
            if (r0 + r < c0 + c && b(r, c) > 0.0) cand.push_back({r0 + r, c0 + c, b(r, c)});
        if (cand.size() > k) {
          std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                            edge_before);
          cand.resize(k);
        }
        return cand;
      });
  const auto res = rt.run(tasks);
  std::vector<ScoredEdge> all;
  for (const auto& c : res.results) all.insert(all.end(), c.begin(), c.end());
  std::sort(all.begin(), all.end(), edge_before);
  if (all.size() > k) all.resize(k);
  return all;
}

nlohmann::json AnomalyReport::to_json() const {
  nlohmann::json nj = nlohmann::json::array();
  for (const auto& n : nodes) nj.push_back({{"id", n.id}, {"score", n.score}, {"rank", n.rank}});
  nlohmann::json ej = nlohmann::json::array();
  for (const auto& e : edges) ej.push_back({{"i", e.i}, {"j", e.j}, {"delta_e", e.delta_e}});
  return {{"parameters", parameters}, {"nodes", nj}, {"edges", ej}, {"scores", scores}};
}

void AnomalyReport::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << to_json().dump(2) << '\n';
  if (!os) throw Error(ErrorCode::kIo, fmt::format("cannot write report {}", path.string()));
}

AnomalyReport detect(Runtime& rt, const GraphPair& gp, const Embedding& z1, const Embedding& z2,
                     const DetectOptions& opts) {
  const std::size_t n = gp.a1.n_rows();
  const MatrixHandle de = delta_e(rt, gp, z1, z2, opts.delta);
  AnomalyReport rep;
  try {
    rep.scores = node_scores(rt, de);
    rep.nodes = top_k(rep.scores, std::min(std::max<std::size_t>(opts.top_nodes, 1), n));
    rep.edges = top_edges(rt, de, opts.top_edges);
  } catch (...) {
    remove_matrix(de);
    throw;
  }
  remove_matrix(de);
  rep.parameters = {{"g1", gp.a1.name()},
                    {"g2", gp.a2.name()},
                    {"n", n},
                    {"volume1", gp.v1},
                    {"volume2", gp.v2},
                    {"z1", z1.metadata()},
                    {"z2", z2.metadata()},
                    {"tolerance", opts.delta.tolerance},
                    {"dense_path", opts.delta.dense_path},
                    {"top_nodes", rep.nodes.size()},
                    {"top_edges", opts.top_edges}};
  return rep;
}

}  // namespace caddelag
