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

#include "caddelag/embedding.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include <fmt/format.h>

#include "caddelag/error.hpp"
#include "caddelag/philox.hpp"

namespace caddelag {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEmbeddingFile = "embedding.json";

// One Philox call yields 128 sign bits; projection j uses bit j % 128 of the
// draw at counter (u, v, j / 128).
inline Philox4x32::Counter sign_words(const KeyedRng& rng, std::size_t u, std::size_t v,
                                      std::size_t group) {
  return rng.words(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v),
                   static_cast<std::uint32_t>(group));
}

inline bool sign_bit(const Philox4x32::Counter& w, std::size_t j) {
  const std::size_t b = j % 128;
  return (w[b / 32] >> (b % 32)) & 1u;
}

}  // namespace

std::size_t k_rp(double n, double eps) {
  if (!(eps > 0.0) || !(n / eps > 1.0))
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("k_rp needs eps > 0 and n / eps > 1 (n={}, eps={})", n, eps));
  // Guard against ln landing a hair above an integer.
  const double v = std::log(n / eps);
  const double r = std::round(v);
  return static_cast<std::size_t>(std::abs(v - r) < 1e-12 ? r : std::ceil(v));
}

int edge_sign(std::uint64_t seed, std::size_t j, std::size_t u, std::size_t v) {
  const KeyedRng rng(seed, Stream::kEdgeSign);
  return sign_bit(sign_words(rng, u, v, j / 128), j) ? 1 : -1;
}

Panel project_incidence(Runtime& rt, const MatrixHandle& a, std::uint64_t seed, std::size_t k) {
  require_square(a, "project_incidence");
  require_adjacency(rt, a, "project_incidence");
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "project_incidence: k must be >= 1");
  const auto kk = static_cast<Eigen::Index>(k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  const KeyedRng rng(seed, Stream::kEdgeSign);
  const MatrixMeta& meta = a.meta;

  std::vector<BlockId> upper;
  for (const BlockId& id : meta.block_ids())
    if (id.row <= id.col) upper.push_back(id);

  using Partial = std::pair<Panel, Panel>;  // contributions to block-row i and block-row j
  TaskSet<BlockId, Partial> tasks("project:" + a.name(), upper, [&](const BlockId& id) {
    const Block blk = read_block(a, id);
    const std::size_t r0 = meta.row_offset(id.row), c0 = meta.col_offset(id.col);
    Partial out{Panel::Zero(static_cast<Eigen::Index>(blk.rows), kk),
                Panel::Zero(static_cast<Eigen::Index>(blk.cols), kk)};
    Philox4x32::Counter w{};
    for (std::size_t r = 0; r < blk.rows; ++r) {
      const std::size_t u = r0 + r;
      for (std::size_t c = 0; c < blk.cols; ++c) {
        const std::size_t v = c0 + c;
        const double weight = blk(r, c);
        if (u >= v || weight == 0.0) continue;
        const double s = std::sqrt(weight) * scale;
        for (std::size_t j = 0; j < k; ++j) {
          if (j % 128 == 0) w = sign_words(rng, u, v, j / 128);
          const double val = sign_bit(w, j) ? s : -s;
          out.first(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) += val;
          out.second(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) -= val;
        }
      }
    }
    return out;
  });
  const auto res = rt.run(tasks);
  Panel y = Panel::Zero(static_cast<Eigen::Index>(a.n_rows()), kk);
  for (std::size_t t = 0; t < res.keys.size(); ++t) {
    const BlockId& id = res.keys[t];
    const auto& [pr, pc] = res.results[t];
    y.middleRows(static_cast<Eigen::Index>(meta.row_offset(id.row)), pr.rows()) += pr;
    y.middleRows(static_cast<Eigen::Index>(meta.col_offset(id.col)), pc.rows()) += pc;
  }
  return y;
}

void EmbeddingParams::validate() const {
  if (!(eps_rp > 0.0 && eps_rp < 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("eps_rp must be in (0, 1), got {}", eps_rp));
  richardson_steps(delta);
  if (d < 1 || d > 30)
    throw Error(ErrorCode::kInvalidArgument, fmt::format("d must be in [1, 30], got {}", d));
}

nlohmann::json EmbeddingParams::to_json() const {
  nlohmann::json j{{"eps_rp", eps_rp}, {"delta", delta}, {"d", d}, {"seed", seed}, {"k", k}};
  j["split"] = split ? nlohmann::json(std::string(to_string(*split))) : nlohmann::json("auto");
  return j;
}

nlohmann::json Embedding::metadata() const {
  return {{"source", source},
          {"n", n()},
          {"k_rp", k_rp()},
          {"seed", seed},
          {"eps_rp", eps_rp},
          {"delta", delta},
          {"d", d},
          {"q", delta > 0.0 ? nlohmann::json(richardson_steps(delta)) : nlohmann::json()},
          {"volume", volume},
          {"split", std::string(to_string(split))},
          {"structure", structure.to_json()}};
}

Embedding commute_time_embedding(Runtime& rt, const MatrixHandle& a, const EmbeddingParams& params,
                                 const ChainPreconditioner* chain) {
  params.validate();
  require_square(a, "commute_time_embedding");
  const std::size_t n = a.n_rows();

  Embedding e;
  e.source = a.name();
  e.seed = params.seed;
  e.eps_rp = params.eps_rp;
  e.delta = params.delta;
  e.structure = analyze_structure(rt, a);
  if (chain) {
    if (chain->n() != n)
      throw Error(ErrorCode::kDimension,
                  fmt::format("chain has n={}, graph '{}' has n={}", chain->n(), a.name(), n));
    e.split = chain->split;
    e.d = chain->d;
  } else {
    e.split = params.split.value_or(e.structure.has_bipartite_component ? ChainSplit::kLazy
                                                                        : ChainSplit::kStandard);
    e.d = params.d;
  }

  const std::size_t k = params.k ? params.k : k_rp(static_cast<double>(n), params.eps_rp);
  const Panel y = project_incidence(rt, a, params.seed, k);

  const DenseVector deg = row_sums(rt, a);
  for (double v : deg) e.volume += v;

  if (chain) {
    e.z = estimate_solution(rt, *chain, y, params.delta);
  } else {
    const MatrixHandle lap = laplacian(rt, a, rt.temp_name("laplacian"));
    std::optional<ChainPreconditioner> pc;
    try {
      pc = chain_product(rt, lap, e.d, e.split, rt.temp_name("chain"));
      e.z = estimate_solution(rt, *pc, y, params.delta);
    } catch (...) {
      remove_matrix(lap);
      if (pc) fs::remove_all(pc->dir);
      throw;
    }
    remove_matrix(lap);
    if (!params.keep_chain) fs::remove_all(pc->dir);
  }
  for (Eigen::Index c = 0; c < e.z.cols(); ++c) e.z.col(c).array() -= e.z.col(c).mean();
  return e;
}

MatrixHandle save_embedding(Runtime& rt, const Embedding& e, const fs::path& root,
                            const std::string& name, std::size_t block_size) {
  const MatrixMeta meta{name, e.n(), e.k_rp(), block_size, false};
  MatrixHandle h;
  {
    ScratchOverride into(rt, root);
    h = from_function(rt, meta, [&](std::size_t i, std::size_t j) {
      return e.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
  }
  std::ofstream os(h.root / kEmbeddingFile);
  os << e.metadata().dump(2) << '\n';
  if (!os)
    throw Error(ErrorCode::kIo, fmt::format("cannot write {}", (h.root / kEmbeddingFile).string()));
  return h;
}

Embedding load_embedding(const fs::path& root, const std::string& name) {
  const MatrixHandle h = open_matrix(root, name);
  std::ifstream is(h.root / kEmbeddingFile);
  if (!is)
    throw Error(ErrorCode::kIo, fmt::format("'{}' has no {}; not an embedding", name, kEmbeddingFile));
  Embedding e;
  try {
    nlohmann::json j;
    is >> j;
    e.source = j.at("source").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.eps_rp = j.at("eps_rp").get<double>();
    e.delta = j.at("delta").get<double>();
    e.d = j.at("d").get<std::size_t>();
    e.volume = j.at("volume").get<double>();
    e.split = chain_split_from_string(j.at("split").get<std::string>());
    const auto& s = j.at("structure");
    e.structure.nodes = s.at("nodes").get<std::size_t>();
    e.structure.components = s.at("components").get<std::size_t>();
    e.structure.isolated_nodes = s.at("isolated_nodes").get<std::size_t>();
    e.structure.has_bipartite_component = s.at("has_bipartite_component").get<bool>();
    if (j.at("n").get<std::size_t>() != h.n_rows() || j.at("k_rp").get<std::size_t>() != h.n_cols())
      throw Error(ErrorCode::kCorrupt, fmt::format("'{}': {} disagrees with meta.json", name,
                                                   kEmbeddingFile));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kCorrupt, fmt::format("'{}': bad {}: {}", name, kEmbeddingFile, ex.what()));
  }
  const Eigen::MatrixXd z = to_dense(h);
  e.z = z;
  return e;
}

Block pairwise_distance_block(const Embedding& e, IndexRange rows, IndexRange cols) {
  if (rows.begin > rows.end || cols.begin > cols.end || rows.end > e.n() || cols.end > e.n())
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("distance range [{}, {}) x [{}, {}) outside n={}", rows.begin, rows.end,
                            cols.begin, cols.end, e.n()));
  Block b(rows.size(), cols.size());
  for (std::size_t r = 0; r < b.rows; ++r)
    for (std::size_t c = 0; c < b.cols; ++c)
      b(r, c) = squared_distance(e.z, rows.begin + r, cols.begin + c);
  return b;
}

}  // namespace caddelag
