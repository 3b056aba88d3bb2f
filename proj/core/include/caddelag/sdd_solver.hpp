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

// Solver for symmetric diagonally dominant systems M x = b built from a
// precomputed inverse chain and preconditioned Richardson refinement.
//
// With M = D - A and S = D^{-1/2} A D^{-1/2}:
//   P   = (I + S)(I + S^2)...(I + S^{2^{d-1}}) D^{-1/2}
//   P1  = D^{-1/2} P           (approximate inverse of M)
//   P2  = P1 M
// and the refinement is y_{k+1} = y_k - P2 y_k + P1 b, starting from y_1 = 0,
// for q = ceil(ln(1/delta)) steps. Each refinement step only needs
// matrix-vector products.
//
// crude_solve / exact_solve are the unrefactored reference paths: they apply
// the chain to a vector with repeated matvecs instead of precomputing P1, P2.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "caddelag/blockops.hpp"

namespace caddelag {

/// How M is split into D - A before building the chain.
///
/// kStandard uses D = diag(M). If a component of the graph is bipartite, S has
/// eigenvalue -1, the chain annihilates that direction and refinement stalls.
/// kLazy splits M = 2D - (D + A) instead, which maps the spectrum of S into
/// [0, 1] at the cost of slower decay on the slowest modes.
enum class ChainSplit { kStandard, kLazy };

std::string_view to_string(ChainSplit split);
ChainSplit chain_split_from_string(std::string_view s);

/// M = D - A with D diagonal and A non-negative, symmetric, zero diagonal.
struct SddDecomposition {
  DiagonalMatrix dvec;
  MatrixHandle a;
};

inline constexpr double kDominanceTolerance = 1e-9;

/// Splits and validates M. Throws kAsymmetric or kNotSdd.
SddDecomposition decompose_sdd(Runtime& rt, const MatrixHandle& m,
                               double tolerance = kDominanceTolerance);

struct ChainPreconditioner {
  MatrixHandle p1;
  MatrixHandle p2;
  std::size_t d = 1;
  ChainSplit split = ChainSplit::kStandard;
  std::string source;
  std::filesystem::path dir;  // holds p1/, p2/ and chain.json

  std::size_t n() const { return p1.n_rows(); }
};

/// Builds P1 and P2 under `<scratch>/<name>/`. `name` defaults to
/// `<M>_chain_d<d>`. Uses (d - 1) squarings of S, (d - 1) chain products and
/// one closing product P1 M; diagonal factors are applied with diag_scale.
ChainPreconditioner chain_product(Runtime& rt, const MatrixHandle& m, std::size_t d,
                                  ChainSplit split = ChainSplit::kStandard,
                                  const std::string& name = {});

ChainPreconditioner load_chain(const std::filesystem::path& dir);

/// q = ceil(ln(1 / delta)).
std::size_t richardson_steps(double delta);

/// Algorithm path with the precomputed chain (also known as ExactSolveFast).
DenseVector estimate_solution(Runtime& rt, const ChainPreconditioner& pc, const DenseVector& b,
                              double delta);
/// Same, for every column of `b` at once.
Panel estimate_solution(Runtime& rt, const ChainPreconditioner& pc, const Panel& b, double delta);

/// Variant starting from y_1 = P1 b and running q - 2 steps. Requires q >= 2.
DenseVector estimate_solution_warm(Runtime& rt, const ChainPreconditioner& pc,
                                   const DenseVector& b, double delta);

/// Returns (I + S)...(I + S^{2^{d-1}}) D^{-1/2} b, i.e. the chain applied to b
/// before the outer D^{-1/2}.
DenseVector crude_solve(Runtime& rt, const SddDecomposition& dec, const DenseVector& b,
                        std::size_t d, ChainSplit split = ChainSplit::kStandard);

/// Richardson refinement calling crude_solve once per step.
DenseVector exact_solve(Runtime& rt, const SddDecomposition& dec, const DenseVector& b,
                        std::size_t d, double delta, ChainSplit split = ChainSplit::kStandard);

}  // namespace caddelag
