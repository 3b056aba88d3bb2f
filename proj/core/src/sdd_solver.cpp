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

#include "caddelag/sdd_solver.hpp"

#include <cmath>
#include <deque>
#include <fstream>

#include <fmt/format.h>

#include "caddelag/error.hpp"
#include "caddelag/structure.hpp"

namespace caddelag {

namespace fs = std::filesystem;

namespace {

constexpr const char* kChainFile = "chain.json";

struct SplitParts {
  DiagonalMatrix dd;     // diagonal of the split
  DiagonalMatrix dh;     // dd^{-1/2}
  DiagonalMatrix extra;  // added to A under kLazy (= D)
  bool has_extra = false;
};

SplitParts split_parts(const SddDecomposition& dec, ChainSplit split) {
  SplitParts s;
  s.dd = dec.dvec;
  if (split == ChainSplit::kLazy) {
    for (double& v : s.dd.entries) v *= 2.0;
    s.extra = dec.dvec;
    s.has_extra = true;
  }
  s.dh = inverse_sqrt(s.dd);
  return s;
}

DenseVector scaled(const DiagonalMatrix& d, const DenseVector& v) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = d[i] * v[i];
  return out;
}

// S v for the chosen split, using only matvecs with A.
DenseVector apply_s(Runtime& rt, const SddDecomposition& dec, const SplitParts& sp,
                    const DenseVector& v) {
  const DenseVector u = scaled(sp.dh, v);
  DenseVector w = matvec(rt, dec.a, u);
  if (sp.has_extra)
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += sp.extra[i] * u[i];
  return scaled(sp.dh, w);
}

// (D - A) y
DenseVector apply_m(Runtime& rt, const SddDecomposition& dec, const DenseVector& y) {
  DenseVector ay = matvec(rt, dec.a, y);
  for (std::size_t i = 0; i < y.size(); ++i) ay[i] = dec.dvec[i] * y[i] - ay[i];
  return ay;
}

void check_chain_length(std::size_t d) {
  if (d < 1 || d > 30)
    throw Error(ErrorCode::kInvalidArgument, fmt::format("chain length d must be in [1, 30], got {}", d));
}

void check_rhs(std::size_t n, std::size_t len) {
  if (len != n)
    throw Error(ErrorCode::kDimension,
                fmt::format("right-hand side has length {}, system has {}", len, n));
}

// Scratch intermediates removed when the owner goes out of scope.
class TempSet {
 public:
  ~TempSet() {
    for (const auto& h : handles_) {
      try {
        remove_matrix(h);
      } catch (...) {
      }
    }
  }
  const MatrixHandle& keep(MatrixHandle h) {
    handles_.push_back(std::move(h));
    return handles_.back();
  }

 private:
  std::deque<MatrixHandle> handles_;
};

}  // namespace

std::string_view to_string(ChainSplit split) {
  return split == ChainSplit::kLazy ? "lazy" : "standard";
}

ChainSplit chain_split_from_string(std::string_view s) {
  if (s == "standard") return ChainSplit::kStandard;
  if (s == "lazy") return ChainSplit::kLazy;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown chain split '{}'", s));
}

std::size_t richardson_steps(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("delta must be in (0, 1), got {}", delta));
  return static_cast<std::size_t>(std::ceil(std::log(1.0 / delta)));
}

SddDecomposition decompose_sdd(Runtime& rt, const MatrixHandle& m, double tolerance) {
  require_square(m, "decompose_sdd");
  MatrixMeta meta = m.meta;
  meta.name = rt.temp_name("offdiag");
  MatrixHandle a = create_matrix(rt.scratch(), meta);
  try {
    TaskSet<BlockId, std::vector<double>> tasks(
        "decompose:" + m.name(), m.meta.block_ids(), [&](const BlockId& id) {
          Block x = read_block(m, id);
          std::vector<double> diag;
          for (double& v : x.values) v = v == 0.0 ? 0.0 : -v;
          if (id.row == id.col) {
            diag.resize(x.rows);
            for (std::size_t r = 0; r < x.rows; ++r) {
              diag[r] = x(r, r) == 0.0 ? 0.0 : -x(r, r);
              x(r, r) = 0.0;
            }
          }
          write_block(a, id, x);
          return diag;
        });
    const auto res = rt.run(tasks);
    SddDecomposition dec{DiagonalMatrix{std::vector<double>(m.n_rows(), 0.0)}, a};
    for (std::size_t t = 0; t < res.keys.size(); ++t) {
      const BlockId& id = res.keys[t];
      if (id.row != id.col) continue;
      const auto& diag = res.results[t];
      std::copy(diag.begin(), diag.end(),
                dec.dvec.entries.begin() + static_cast<std::ptrdiff_t>(m.meta.row_offset(id.row)));
    }

    const AdjacencyCheck check = check_adjacency(rt, a);
    if (!check.symmetric)
      throw Error(ErrorCode::kAsymmetric, fmt::format("'{}' is not symmetric (max asymmetry {})",
                                                      m.name(), check.max_asymmetry));
    if (!check.non_negative)
      throw Error(ErrorCode::kNotSdd, fmt::format("'{}' has positive off-diagonal entries", m.name()));
    const DenseVector offsum = row_sums(rt, a);
    for (std::size_t i = 0; i < offsum.size(); ++i) {
      if (dec.dvec[i] + tolerance < offsum[i])
        throw Error(ErrorCode::kNotSdd,
                    fmt::format("'{}' is not diagonally dominant at row {} ({} < {})", m.name(), i,
                                dec.dvec[i], offsum[i]));
    }
    return dec;
  } catch (...) {
    remove_matrix(a);
    throw;
  }
}

ChainPreconditioner chain_product(Runtime& rt, const MatrixHandle& m, std::size_t d,
                                  ChainSplit split, const std::string& name) {
  check_chain_length(d);
  const std::string chain_name = name.empty() ? fmt::format("{}_chain_d{}", m.name(), d) : name;
  const fs::path dir = rt.scratch() / chain_name;
  if (fs::exists(dir))
    throw Error(ErrorCode::kPathCollision, fmt::format("chain '{}' already exists", dir.string()));

  TempSet temps;
  const SddDecomposition dec = decompose_sdd(rt, m);
  temps.keep(dec.a);
  const SplitParts sp = split_parts(dec, split);

  const MatrixHandle* base = &dec.a;
  if (sp.has_extra) base = &temps.keep(add_diagonal(rt, dec.a, 1.0, sp.extra));
  const MatrixHandle s = temps.keep(diag_scale(rt, *base, sp.dh, sp.dh));

  // product = (I + S)(I + S^2)...(I + S^{2^{d-1}})
  MatrixHandle product = temps.keep(add_identity(rt, s));
  MatrixHandle power = s;
  for (std::size_t k = 1; k < d; ++k) {
    power = temps.keep(multiply(rt, power, power));
    const MatrixHandle factor = temps.keep(add_identity(rt, power));
    product = temps.keep(multiply(rt, product, factor));
  }

  ChainPreconditioner pc;
  pc.d = d;
  pc.split = split;
  pc.source = m.name();
  pc.dir = dir;
  {
    ScratchOverride into(rt, dir);
    // P1 = D^{-1/2} (product D^{-1/2}); P2 = P1 M.
    pc.p1 = diag_scale(rt, product, sp.dh, sp.dh, "p1");
    pc.p2 = multiply(rt, pc.p1, m, "p2");
  }
  std::ofstream os(dir / kChainFile);
  os << nlohmann::json{{"d", pc.d},
                       {"split", std::string(to_string(pc.split))},
                       {"source", pc.source},
                       {"n", pc.p1.n_rows()},
                       {"block_size", pc.p1.block_size()}}
            .dump(2)
     << '\n';
  if (!os) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", (dir / kChainFile).string()));
  return pc;
}

ChainPreconditioner load_chain(const fs::path& dir) {
  std::ifstream is(dir / kChainFile);
  if (!is) throw Error(ErrorCode::kIo, fmt::format("no chain.json under {}", dir.string()));
  try {
    nlohmann::json j;
    is >> j;
    ChainPreconditioner pc;
    pc.d = j.at("d").get<std::size_t>();
    pc.split = chain_split_from_string(j.at("split").get<std::string>());
    pc.source = j.at("source").get<std::string>();
    pc.dir = dir;
    pc.p1 = open_matrix(dir, "p1");
    pc.p2 = open_matrix(dir, "p2");
    if (pc.p1.n_rows() != j.at("n").get<std::size_t>() || pc.p2.meta.n_rows != pc.p1.meta.n_rows)
      throw Error(ErrorCode::kCorrupt, "chain.json dimensions disagree with p1/p2");
    return pc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, fmt::format("{}: {}", (dir / kChainFile).string(), e.what()));
  }
}

Panel estimate_solution(Runtime& rt, const ChainPreconditioner& pc, const Panel& b, double delta) {
  check_rhs(pc.n(), static_cast<std::size_t>(b.rows()));
  const std::size_t q = richardson_steps(delta);
  const Panel chi = matvec(rt, pc.p1, b);
  Panel y = Panel::Zero(b.rows(), b.cols());
  for (std::size_t k = 1; k < q; ++k) y = y - matvec(rt, pc.p2, y) + chi;
  return y;
}

DenseVector estimate_solution(Runtime& rt, const ChainPreconditioner& pc, const DenseVector& b,
                              double delta) {
  check_rhs(pc.n(), b.size());
  const std::size_t q = richardson_steps(delta);
  const DenseVector chi = matvec(rt, pc.p1, b);
  DenseVector y(b.size(), 0.0);
  for (std::size_t k = 1; k < q; ++k) {
    const DenseVector p2y = matvec(rt, pc.p2, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] - p2y[i] + chi[i];
  }
  return y;
}

DenseVector estimate_solution_warm(Runtime& rt, const ChainPreconditioner& pc,
                                   const DenseVector& b, double delta) {
  check_rhs(pc.n(), b.size());
  const std::size_t q = richardson_steps(delta);
  if (q < 2)
    throw Error(ErrorCode::kInvalidArgument, "warm-start refinement needs q >= 2 (delta < 1/e)");
  const DenseVector chi = matvec(rt, pc.p1, b);
  DenseVector y = chi;
  for (std::size_t k = 1; k + 1 < q; ++k) {
    const DenseVector p2y = matvec(rt, pc.p2, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] - p2y[i] + chi[i];
  }
  return y;
}

DenseVector crude_solve(Runtime& rt, const SddDecomposition& dec, const DenseVector& b,
                        std::size_t d, ChainSplit split) {
  check_chain_length(d);
  check_rhs(dec.dvec.size(), b.size());
  const SplitParts sp = split_parts(dec, split);
  DenseVector y = scaled(sp.dh, b);
  // Factors commute; apply (I + S^{2^k}) for k = 0..d-1 with 2^k matvecs each.
  for (std::size_t k = 0; k < d; ++k) {
    DenseVector p = y;
    for (std::size_t t = 0; t < (std::size_t{1} << k); ++t) p = apply_s(rt, dec, sp, p);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += p[i];
  }
  return y;
}

DenseVector exact_solve(Runtime& rt, const SddDecomposition& dec, const DenseVector& b,
                        std::size_t d, double delta, ChainSplit split) {
  check_rhs(dec.dvec.size(), b.size());
  const std::size_t q = richardson_steps(delta);
  const SplitParts sp = split_parts(dec, split);
  const DenseVector chi = scaled(sp.dh, crude_solve(rt, dec, b, d, split));
  DenseVector y(b.size(), 0.0);
  for (std::size_t k = 1; k < q; ++k) {
    const DenseVector u = apply_m(rt, dec, y);
    const DenseVector u2 = scaled(sp.dh, crude_solve(rt, dec, u, d, split));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] - u2[i] + chi[i];
  }
  return y;
}

}  // namespace caddelag
