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

// Linear algebra over block matrices. Every operation is one or more runtime
// stages; tasks read their inputs from the blockstore and write exactly the
// output blocks they own.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "caddelag/blockstore.hpp"
#include "caddelag/runtime.hpp"

namespace caddelag {

using DenseVector = std::vector<double>;

/// In-memory n x k multi-vector (one column per right-hand side).
using Panel = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DiagonalMatrix {
  std::vector<double> entries;

  std::size_t size() const { return entries.size(); }
  double operator[](std::size_t i) const { return entries[i]; }
};

/// d^{-1/2} entrywise, with 0 mapped to 0 so isolated nodes drop out.
DiagonalMatrix inverse_sqrt(const DiagonalMatrix& d);

enum class ElementwiseOp { kAdd, kSub, kAbsSub, kHadamard };

MatrixMeta square_meta(std::string name, std::size_t n, std::size_t block_size, bool symmetric);

/// Writes a matrix whose entry (i, j) is `f(i, j)`, one task per block.
MatrixHandle from_function(Runtime& rt, const MatrixMeta& meta,
                           const std::function<double(std::size_t, std::size_t)>& f);

MatrixHandle from_dense(Runtime& rt, const std::string& name, const Eigen::MatrixXd& m,
                        std::size_t block_size, bool symmetric);

/// Reads every block into memory. Intended for tests and the dense oracle.
Eigen::MatrixXd to_dense(const MatrixHandle& h);

MatrixHandle identity(Runtime& rt, const std::string& name, std::size_t n, std::size_t block_size);

/// C = A B. One task per output block (i, j); the task reads block-row i of A
/// and block-column j of B (2 * beta reads), accumulates in k order, and writes
/// C_{i,j} once. No data moves between tasks.
MatrixHandle multiply(Runtime& rt, const MatrixHandle& a, const MatrixHandle& b,
                      const std::string& out_name = {});

/// y = A x, reduced per block-row in column-block order.
DenseVector matvec(Runtime& rt, const MatrixHandle& a, const DenseVector& x);

/// Y = A X for a dense n x k panel X.
Panel matvec(Runtime& rt, const MatrixHandle& a, const Panel& x);

DenseVector row_sums(Runtime& rt, const MatrixHandle& a);

/// D = A 1 as a diagonal.
DiagonalMatrix degrees(Runtime& rt, const MatrixHandle& a);

MatrixHandle elementwise(Runtime& rt, const MatrixHandle& a, const MatrixHandle& b,
                         ElementwiseOp op, const std::string& out_name = {});

/// out(i, j) = dl_i * A(i, j) * dr_j.
MatrixHandle diag_scale(Runtime& rt, const MatrixHandle& a, const DiagonalMatrix& dl,
                        const DiagonalMatrix& dr, const std::string& out_name = {});

/// alpha * A + beta * I.
MatrixHandle scale_add_identity(Runtime& rt, const MatrixHandle& a, double alpha, double beta,
                                const std::string& out_name = {});

/// alpha * A + diag(v).
MatrixHandle add_diagonal(Runtime& rt, const MatrixHandle& a, double alpha, const DiagonalMatrix& v,
                          const std::string& out_name = {});

inline MatrixHandle add_identity(Runtime& rt, const MatrixHandle& a,
                                 const std::string& out_name = {}) {
  return scale_add_identity(rt, a, 1.0, 1.0, out_name);
}

/// L = D - A with D the row sums of A.
MatrixHandle laplacian(Runtime& rt, const MatrixHandle& a, const std::string& out_name = {});

/// Shape and block-size check shared by the binary operations.
void require_same_shape(const MatrixHandle& a, const MatrixHandle& b, const char* what);
void require_square(const MatrixHandle& a, const char* what);

}  // namespace caddelag
