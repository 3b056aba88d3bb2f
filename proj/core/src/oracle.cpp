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

#include "caddelag/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <tuple>

#include <fmt/format.h>

#include "caddelag/embedding.hpp"
#include "caddelag/error.hpp"

namespace caddelag::oracle {

namespace {

using Index = Eigen::Index;

bool dense_has_bipartite_component(const DenseMatrix& a) {
  const Index n = a.rows();
  std::vector<int> color(static_cast<std::size_t>(n), -1);
  for (Index s = 0; s < n; ++s) {
    if (color[static_cast<std::size_t>(s)] != -1) continue;
    color[static_cast<std::size_t>(s)] = 0;
    std::deque<Index> queue{s};
    bool has_edge = false, odd = false;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (Index v = 0; v < n; ++v) {
        if (v == u || a(u, v) == 0.0) continue;
        has_edge = true;
        int& cv = color[static_cast<std::size_t>(v)];
        const int cu = color[static_cast<std::size_t>(u)];
        if (cv == -1) {
          cv = 1 - cu;
          queue.push_back(v);
        } else if (cv == cu) {
          odd = true;
        }
      }
    }
    if (has_edge && !odd) return true;
  }
  return false;
}

struct DenseSplit {
  Eigen::VectorXd dh;     // inverse square root of the split diagonal
  Eigen::VectorXd extra;  // added to A (lazy split), else zero
  DenseMatrix a;          // off-diagonal part, negated
};

DenseSplit split_dense(const DenseMatrix& m, ChainSplit split) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kDimension, "chain solve needs a square matrix");
  DenseSplit s;
  const Index n = m.rows();
  s.a = -m;
  s.a.diagonal().setZero();
  Eigen::VectorXd dd = m.diagonal();
  s.extra = Eigen::VectorXd::Zero(n);
  if (split == ChainSplit::kLazy) {
    s.extra = dd;
    dd *= 2.0;
  }
  s.dh.resize(n);
  for (Index i = 0; i < n; ++i) s.dh(i) = dd(i) > 0.0 ? 1.0 / std::sqrt(dd(i)) : 0.0;
  return s;
}

DenseMatrix apply_s(const DenseSplit& s, const DenseMatrix& v) {
  const DenseMatrix u = s.dh.asDiagonal() * v;
  DenseMatrix w = s.a * u;
  w += s.extra.asDiagonal() * u;
  return s.dh.asDiagonal() * w;
}

DenseMatrix crude(const DenseSplit& s, const DenseMatrix& b, std::size_t d) {
  DenseMatrix y = s.dh.asDiagonal() * b;
  for (std::size_t k = 0; k < d; ++k) {
    DenseMatrix p = y;
    for (std::size_t t = 0; t < (std::size_t{1} << k); ++t) p = apply_s(s, p);
    y += p;
  }
  return y;
}

void center_columns(DenseMatrix& z) {
  for (Index c = 0; c < z.cols(); ++c) z.col(c).array() -= z.col(c).mean();
}

DenseMatrix distances_of(const DenseMatrix& z, double volume) {
  const Index n = z.rows();
  DenseMatrix c = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) c(i, j) = volume * (z.row(i) - z.row(j)).squaredNorm();
  return c;
}

double volume_of(const DenseMatrix& a) {
  double v = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (Index j = 0; j < a.cols(); ++j) r += a(i, j);
    v += r;
  }
  return v;
}

Eigen::SelfAdjointEigenSolver<DenseMatrix> laplacian_eig(const DenseMatrix& a) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(laplacian(a));
  if (es.info() != Eigen::Success) throw Error(ErrorCode::kSingular, "Laplacian eigensolver failed");
  return es;
}

ChainSplit resolve_split(const DenseMatrix& a, const std::optional<ChainSplit>& split) {
  if (split) return *split;
  return dense_has_bipartite_component(a) ? ChainSplit::kLazy : ChainSplit::kStandard;
}

}  // namespace

void require_cap(std::size_t n, std::size_t cap) {
  if (n > cap)
    throw Error(ErrorCode::kOversized, fmt::format("n={} exceeds the dense oracle cap {}", n, cap));
}

DenseMatrix load_dense(const MatrixHandle& h, std::size_t cap) {
  require_cap(std::max(h.n_rows(), h.n_cols()), cap);
  return to_dense(h);
}

DenseMatrix laplacian(const DenseMatrix& a) {
  DenseMatrix l = -a;
  for (Index i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (Index j = 0; j < a.cols(); ++j) r += a(i, j);
    l(i, i) = r - a(i, i);
  }
  return l;
}

DenseMatrix laplacian_pinv(const DenseMatrix& a) {
  const auto es = laplacian_eig(a);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double tol = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv(lam.size());
  for (Index i = 0; i < lam.size(); ++i) inv(i) = lam(i) > tol ? 1.0 / lam(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

DenseMatrix effective_resistances(const DenseMatrix& a) {
  const DenseMatrix lp = laplacian_pinv(a);
  const Index n = a.rows();
  DenseMatrix r = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) r(i, j) = lp(i, i) + lp(j, j) - 2.0 * lp(i, j);
  return r;
}

DenseMatrix exact_commute_times(const DenseMatrix& a, std::size_t cap) {
  require_cap(static_cast<std::size_t>(a.rows()), cap);
  return volume_of(a) * effective_resistances(a);
}

Eigen::VectorXd exact_solve(const DenseMatrix& m, const Eigen::VectorXd& b) {
  if (m.rows() != m.cols() || m.rows() != b.size())
    throw Error(ErrorCode::kDimension, "exact_solve: shape mismatch");
  const Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(m);
  const Eigen::VectorXd x = cod.solve(b);
  const double scale = std::max(1.0, b.norm());
  if ((m * x - b).norm() > 1e-8 * scale)
    throw Error(ErrorCode::kSingular, "exact_solve: singular system with inconsistent right-hand side");
  return x;
}

DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::kDimension, "dense_multiply: inner dimensions differ");
  DenseMatrix c = DenseMatrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix chain_crude_solve(const DenseMatrix& m, const DenseMatrix& b, std::size_t d,
                              ChainSplit split) {
  if (d < 1 || d > 30) throw Error(ErrorCode::kInvalidArgument, "chain length d must be in [1, 30]");
  return crude(split_dense(m, split), b, d);
}

DenseMatrix chain_exact_solve(const DenseMatrix& m, const DenseMatrix& b, std::size_t d,
                              double delta, ChainSplit split) {
  if (d < 1 || d > 30) throw Error(ErrorCode::kInvalidArgument, "chain length d must be in [1, 30]");
  const std::size_t q = richardson_steps(delta);
  const DenseSplit s = split_dense(m, split);
  const DenseMatrix chi = s.dh.asDiagonal() * crude(s, b, d);
  DenseMatrix y = DenseMatrix::Zero(b.rows(), b.cols());
  for (std::size_t k = 1; k < q; ++k) {
    const DenseMatrix u = m * y;
    y = y - s.dh.asDiagonal() * crude(s, u, d) + chi;
  }
  return y;
}

DenseMatrix incidence_projection(const DenseMatrix& a, std::uint64_t seed, std::size_t k) {
  const Index n = a.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  DenseMatrix y = DenseMatrix::Zero(n, static_cast<Index>(k));
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v) {
      if (a(u, v) == 0.0) continue;
      const double s = std::sqrt(a(u, v)) * scale;
      for (std::size_t j = 0; j < k; ++j) {
        const double val = edge_sign(seed, j, static_cast<std::size_t>(u), static_cast<std::size_t>(v)) * s;
        y(u, static_cast<Index>(j)) += val;
        y(v, static_cast<Index>(j)) -= val;
      }
    }
  return y;
}

DenseMatrix dense_embedding(const DenseMatrix& a, const EmbeddedSettings& s) {
  if (s.k == 0) throw Error(ErrorCode::kInvalidArgument, "dense_embedding: k must be >= 1");
  const DenseMatrix y = incidence_projection(a, s.seed, s.k);
  DenseMatrix z;
  if (s.solver == EmbeddedSolver::kPseudoinverse) {
    z = laplacian_pinv(a) * y;
  } else {
    z = chain_exact_solve(laplacian(a), y, s.d, s.delta, resolve_split(a, s.split));
  }
  center_columns(z);
  return z;
}

DenseMatrix embedded_commute_times(const DenseMatrix& a, const EmbeddedSettings& s) {
  return distances_of(dense_embedding(a, s), volume_of(a));
}

Embedding exact_embedding(const DenseMatrix& a, const std::string& source) {
  const auto es = laplacian_eig(a);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double tol = 1e-10 * lam.cwiseAbs().maxCoeff();
  Eigen::VectorXd w(lam.size());
  for (Index i = 0; i < lam.size(); ++i) w(i) = lam(i) > tol ? 1.0 / std::sqrt(lam(i)) : 0.0;
  Embedding e;
  DenseMatrix z = es.eigenvectors() * w.asDiagonal();
  center_columns(z);
  e.z = z;
  e.source = source;
  e.volume = volume_of(a);
  e.structure.nodes = static_cast<std::size_t>(a.rows());
  return e;
}

AnomalyReport oracle_cad(const DenseMatrix& a1, const DenseMatrix& a2, const CadOptions& opts,
                         std::size_t cap) {
  if (a1.rows() != a2.rows() || a1.cols() != a2.cols() || a1.rows() != a1.cols())
    throw Error(ErrorCode::kDimension, "oracle_cad: graphs differ in shape");
  const auto n = static_cast<std::size_t>(a1.rows());
  require_cap(n, cap);
  DenseMatrix c1, c2;
  if (opts.mode == CadMode::kExact) {
    c1 = exact_commute_times(a1, cap);
    c2 = exact_commute_times(a2, cap);
  } else {
    c1 = embedded_commute_times(a1, opts.g1);
    c2 = embedded_commute_times(a2, opts.g2);
  }
  AnomalyReport rep;
  rep.scores.assign(n, 0.0);
  std::vector<ScoredEdge> edges;
  for (Index i = 0; i < a1.rows(); ++i) {
    double f = 0.0;
    for (Index j = 0; j < a1.cols(); ++j) {
      const double da = std::abs(a1(i, j) - a2(i, j));
      if (da == 0.0) continue;
      const double de = da * std::abs(c1(i, j) - c2(i, j));
      f += de;
      if (i < j && de > 0.0)
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), de});
    }
    rep.scores[static_cast<std::size_t>(i)] = f;
  }
  rep.nodes = top_k(rep.scores, std::min(std::max<std::size_t>(opts.top_nodes, 1), n));
  std::sort(edges.begin(), edges.end(), [](const ScoredEdge& x, const ScoredEdge& y) {
    if (x.delta_e != y.delta_e) return x.delta_e > y.delta_e;
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  if (edges.size() > opts.top_edges) edges.resize(opts.top_edges);
  rep.edges = std::move(edges);
  rep.parameters = {{"oracle", opts.mode == CadMode::kExact ? "exact" : "embedded"},
                    {"n", n},
                    {"volume1", volume_of(a1)},
                    {"volume2", volume_of(a2)}};
  return rep;
}

double mean_abs_deviation(const DenseMatrix& approx, const DenseMatrix& truth) {
  if (approx.rows() != truth.rows() || approx.cols() != truth.cols())
    throw Error(ErrorCode::kDimension, "mean_abs_deviation: shapes differ");
  double s = 0.0;
  std::size_t cnt = 0;
  for (Index i = 0; i < truth.rows(); ++i)
    for (Index j = i + 1; j < truth.cols(); ++j) {
      s += std::abs(approx(i, j) - truth(i, j));
      ++cnt;
    }
  return cnt ? s / static_cast<double>(cnt) : 0.0;
}

double relative_error(const DenseMatrix& approx, const DenseMatrix& baseline,
                      const DenseMatrix& truth) {
  const double eb = mean_abs_deviation(baseline, truth);
  if (eb == 0.0) throw Error(ErrorCode::kInvalidArgument, "relative_error: baseline error is zero");
  return (mean_abs_deviation(approx, truth) - eb) / eb;
}

double relative_deviation(const DenseMatrix& approx, const DenseMatrix& truth) {
  const DenseMatrix zero = DenseMatrix::Zero(truth.rows(), truth.cols());
  const double t = mean_abs_deviation(zero, truth);
  if (t == 0.0) throw Error(ErrorCode::kInvalidArgument, "relative_deviation: truth is zero");
  return mean_abs_deviation(approx, truth) / t;
}

}  // namespace caddelag::oracle
