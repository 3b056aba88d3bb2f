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

// In-memory reference implementations used to check the block pipeline at
// modest n: exact commute times from the Laplacian pseudoinverse, dense
// solves and products, the dense form of the chain solver, and centralized
// change scoring.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "caddelag/anomaly.hpp"
#include "caddelag/blockstore.hpp"
#include "caddelag/sdd_solver.hpp"

namespace caddelag::oracle {

using DenseMatrix = Eigen::MatrixXd;

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Throws kOversized when n exceeds `cap`.
void require_cap(std::size_t n, std::size_t cap = kDefaultDenseCap);

DenseMatrix load_dense(const MatrixHandle& h, std::size_t cap = kDefaultDenseCap);

DenseMatrix laplacian(const DenseMatrix& a);

/// Eigendecomposition pseudoinverse; eigenvalues below 1e-10 * lambda_max
/// are treated as null space.
DenseMatrix laplacian_pinv(const DenseMatrix& a);

/// R(i,j) = l+_ii + l+_jj - 2 l+_ij.
DenseMatrix effective_resistances(const DenseMatrix& a);

/// V_G * R(i,j), with an exact zero diagonal.
DenseMatrix exact_commute_times(const DenseMatrix& a, std::size_t cap = kDefaultDenseCap);

/// Dense direct solve. Singular systems are accepted when b is consistent
/// (minimum-norm solution); otherwise throws kSingular.
Eigen::VectorXd exact_solve(const DenseMatrix& m, const Eigen::VectorXd& b);

/// Plain triple loop.
DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b);

/// Dense counterparts of sdd_solver's crude_solve / exact_solve, applied to
/// every column of `b`.
DenseMatrix chain_crude_solve(const DenseMatrix& m, const DenseMatrix& b, std::size_t d,
                              ChainSplit split = ChainSplit::kStandard);
DenseMatrix chain_exact_solve(const DenseMatrix& m, const DenseMatrix& b, std::size_t d,
                              double delta, ChainSplit split = ChainSplit::kStandard);

/// Y = W^{1/2} B Q with the same keyed signs as project_incidence.
DenseMatrix incidence_projection(const DenseMatrix& a, std::uint64_t seed, std::size_t k);

enum class EmbeddedSolver { kChain, kPseudoinverse };

struct EmbeddedSettings {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t d = 3;
  double delta = 5e-5;
  std::optional<ChainSplit> split;  // unset: lazy iff bipartite component
  EmbeddedSolver solver = EmbeddedSolver::kChain;
};

/// Centered dense embedding Z (n x k).
DenseMatrix dense_embedding(const DenseMatrix& a, const EmbeddedSettings& s);

/// V_G * ||Z_i - Z_j||^2 for the dense embedding.
DenseMatrix embedded_commute_times(const DenseMatrix& a, const EmbeddedSettings& s);

/// Exact embedding with V_G ||Z_i - Z_j||^2 equal to the exact commute time,
/// packaged for the block pipeline (source name and volume filled in).
Embedding exact_embedding(const DenseMatrix& a, const std::string& source);

enum class CadMode { kExact, kEmbedded };

struct CadOptions {
  CadMode mode = CadMode::kExact;
  EmbeddedSettings g1;  // used in kEmbedded mode
  EmbeddedSettings g2;
  std::size_t top_nodes = 100;
  std::size_t top_edges = 100;
};

/// dE and F computed centrally with the same skip and tie rules as the
/// anomaly module.
AnomalyReport oracle_cad(const DenseMatrix& a1, const DenseMatrix& a2, const CadOptions& opts,
                         std::size_t cap = kDefaultDenseCap);

/// Mean over i < j of |approx(i,j) - truth(i,j)|.
double mean_abs_deviation(const DenseMatrix& approx, const DenseMatrix& truth);

/// (err(approx) - err(baseline)) / err(baseline), err = mean_abs_deviation.
double relative_error(const DenseMatrix& approx, const DenseMatrix& baseline,
                      const DenseMatrix& truth);

/// mean |approx - truth| / mean |truth| over i < j.
double relative_deviation(const DenseMatrix& approx, const DenseMatrix& truth);

}  // namespace caddelag::oracle
