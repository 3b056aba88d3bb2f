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

#include "caddelag/blockops.hpp"

#include <cmath>

#include <fmt/format.h>

#include "caddelag/error.hpp"

namespace caddelag {

namespace {

using RowMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMap view(Block& b) {
  return RowMap(b.values.data(), static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}

ConstRowMap view(const Block& b) {
  return ConstRowMap(b.values.data(), static_cast<Eigen::Index>(b.rows),
                     static_cast<Eigen::Index>(b.cols));
}

std::string out_or_temp(Runtime& rt, const std::string& out_name, std::string_view tag) {
  return out_name.empty() ? rt.temp_name(tag) : out_name;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Writes every block of `meta` with `make(id)`.
MatrixHandle map_blocks(Runtime& rt, const MatrixMeta& meta, const std::string& stage,
                        const std::function<Block(const BlockId&)>& make) {
  MatrixHandle out = create_matrix(rt.scratch(), meta);
  TaskSet<BlockId, Unit> tasks(stage, meta.block_ids(), [&](const BlockId& id) {
    write_block(out, id, make(id));
    return Unit{};
  });
  rt.run(tasks);
  return out;
}

void require_vector(const MatrixHandle& a, std::size_t len) {
  if (a.n_cols() != len)
    throw Error(ErrorCode::kDimension, fmt::format("matvec: '{}' has {} columns, vector has {}",
                                                   a.name(), a.n_cols(), len));
}

void require_diag(const DiagonalMatrix& d, std::size_t n, const char* which) {
  if (d.size() != n)
    throw Error(ErrorCode::kDimension,
                fmt::format("diag_scale: {} diagonal has length {}, expected {}", which, d.size(), n));
}

}  // namespace

void require_same_shape(const MatrixHandle& a, const MatrixHandle& b, const char* what) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols() || a.block_size() != b.block_size())
    throw Error(ErrorCode::kDimension,
                fmt::format("{}: '{}' ({}x{}, p={}) and '{}' ({}x{}, p={}) differ in shape", what,
                            a.name(), a.n_rows(), a.n_cols(), a.block_size(), b.name(), b.n_rows(),
                            b.n_cols(), b.block_size()));
}

void require_square(const MatrixHandle& a, const char* what) {
  if (a.n_rows() != a.n_cols())
    throw Error(ErrorCode::kDimension,
                fmt::format("{}: '{}' is {}x{}, not square", what, a.name(), a.n_rows(), a.n_cols()));
}

DiagonalMatrix inverse_sqrt(const DiagonalMatrix& d) {
  DiagonalMatrix out{std::vector<double>(d.size())};
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0.0)
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("inverse_sqrt: negative diagonal entry {} at {}", d[i], i));
    out.entries[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
  }
  return out;
}

MatrixMeta square_meta(std::string name, std::size_t n, std::size_t block_size, bool symmetric) {
  return MatrixMeta{std::move(name), n, n, block_size, symmetric};
}

MatrixHandle from_function(Runtime& rt, const MatrixMeta& meta,
                           const std::function<double(std::size_t, std::size_t)>& f) {
  return map_blocks(rt, meta, "fill:" + meta.name, [&](const BlockId& id) {
    Block b(meta.row_extent(id.row), meta.col_extent(id.col));
    const std::size_t r0 = meta.row_offset(id.row), c0 = meta.col_offset(id.col);
    for (std::size_t r = 0; r < b.rows; ++r)
      for (std::size_t c = 0; c < b.cols; ++c) b(r, c) = f(r0 + r, c0 + c);
    return b;
  });
}

MatrixHandle from_dense(Runtime& rt, const std::string& name, const Eigen::MatrixXd& m,
                        std::size_t block_size, bool symmetric) {
  MatrixMeta meta{name, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                  block_size, symmetric};
  return from_function(rt, meta, [&](std::size_t i, std::size_t j) {
    return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
}

Eigen::MatrixXd to_dense(const MatrixHandle& h) {
  Eigen::MatrixXd m(h.n_rows(), h.n_cols());
  for (const BlockId& id : h.meta.block_ids()) {
    const Block b = read_block(h, id);
    m.block(h.meta.row_offset(id.row), h.meta.col_offset(id.col), b.rows, b.cols) = view(b);
  }
  return m;
}

MatrixHandle identity(Runtime& rt, const std::string& name, std::size_t n, std::size_t block_size) {
  return from_function(rt, square_meta(name, n, block_size, true),
                       [](std::size_t i, std::size_t j) { return i == j ? 1.0 : 0.0; });
}

MatrixHandle multiply(Runtime& rt, const MatrixHandle& a, const MatrixHandle& b,
                      const std::string& out_name) {
  if (a.n_cols() != b.n_rows())
    throw Error(ErrorCode::kDimension,
                fmt::format("multiply: '{}' is {}x{} but '{}' is {}x{}", a.name(), a.n_rows(),
                            a.n_cols(), b.name(), b.n_rows(), b.n_cols()));
  if (a.block_size() != b.block_size())
    throw Error(ErrorCode::kDimension, fmt::format("multiply: block sizes {} and {} differ",
                                                   a.block_size(), b.block_size()));
  const MatrixMeta meta{out_or_temp(rt, out_name, "product"), a.n_rows(), b.n_cols(),
                        a.block_size(), false};
  const std::size_t inner = a.meta.block_cols();
  return map_blocks(rt, meta, "multiply:" + meta.name, [&](const BlockId& id) {
    Block c(meta.row_extent(id.row), meta.col_extent(id.col));
    auto cv = view(c);
    for (std::size_t k = 0; k < inner; ++k) {
      const Block ab = read_block(a, {id.row, k});
      const Block bb = read_block(b, {k, id.col});
      cv.noalias() += view(ab) * view(bb);
    }
    return c;
  });
}

Panel matvec(Runtime& rt, const MatrixHandle& a, const Panel& x) {
  require_vector(a, static_cast<std::size_t>(x.rows()));
  const auto k = x.cols();
  TaskSet<std::size_t, Panel> tasks(
      "matvec:" + a.name(), iota(a.meta.block_rows()), [&](const std::size_t& i) {
        Panel acc = Panel::Zero(static_cast<Eigen::Index>(a.meta.row_extent(i)), k);
        for (std::size_t j = 0; j < a.meta.block_cols(); ++j) {
          const Block blk = read_block(a, {i, j});
          acc.noalias() += view(blk) * x.middleRows(static_cast<Eigen::Index>(a.meta.col_offset(j)),
                                                    static_cast<Eigen::Index>(blk.cols));
        }
        return acc;
      });
  auto res = rt.run(tasks);
  Panel y(static_cast<Eigen::Index>(a.n_rows()), k);
  for (std::size_t i = 0; i < res.keys.size(); ++i)
    y.middleRows(static_cast<Eigen::Index>(a.meta.row_offset(res.keys[i])), res.results[i].rows()) =
        res.results[i];
  return y;
}

DenseVector matvec(Runtime& rt, const MatrixHandle& a, const DenseVector& x) {
  require_vector(a, x.size());
  TaskSet<std::size_t, DenseVector> tasks(
      "matvec:" + a.name(), iota(a.meta.block_rows()), [&](const std::size_t& i) {
        DenseVector acc(a.meta.row_extent(i), 0.0);
        for (std::size_t j = 0; j < a.meta.block_cols(); ++j) {
          const Block blk = read_block(a, {i, j});
          const double* xs = x.data() + a.meta.col_offset(j);
          for (std::size_t r = 0; r < blk.rows; ++r) {
            double s = 0.0;
            const double* row = blk.values.data() + r * blk.cols;
            for (std::size_t c = 0; c < blk.cols; ++c) s += row[c] * xs[c];
            acc[r] += s;
          }
        }
        return acc;
      });
  auto res = rt.run(tasks);
  DenseVector y(a.n_rows());
  for (std::size_t i = 0; i < res.keys.size(); ++i)
    std::copy(res.results[i].begin(), res.results[i].end(),
              y.begin() + static_cast<std::ptrdiff_t>(a.meta.row_offset(res.keys[i])));
  return y;
}

DenseVector row_sums(Runtime& rt, const MatrixHandle& a) {
  return matvec(rt, a, DenseVector(a.n_cols(), 1.0));
}

DiagonalMatrix degrees(Runtime& rt, const MatrixHandle& a) {
  require_square(a, "degrees");
  return DiagonalMatrix{row_sums(rt, a)};
}

MatrixHandle elementwise(Runtime& rt, const MatrixHandle& a, const MatrixHandle& b,
                         ElementwiseOp op, const std::string& out_name) {
  require_same_shape(a, b, "elementwise");
  MatrixMeta meta = a.meta;
  meta.name = out_or_temp(rt, out_name, "elementwise");
  meta.symmetric = a.meta.symmetric && b.meta.symmetric;
  return map_blocks(rt, meta, "elementwise:" + meta.name, [&](const BlockId& id) {
    Block x = read_block(a, id);
    const Block y = read_block(b, id);
    for (std::size_t t = 0; t < x.values.size(); ++t) {
      const double u = x.values[t], v = y.values[t];
      switch (op) {
        case ElementwiseOp::kAdd: x.values[t] = u + v; break;
        case ElementwiseOp::kSub: x.values[t] = u - v; break;
        case ElementwiseOp::kAbsSub: x.values[t] = std::fabs(u - v); break;
        case ElementwiseOp::kHadamard: x.values[t] = u * v; break;
      }
    }
    return x;
  });
}

MatrixHandle diag_scale(Runtime& rt, const MatrixHandle& a, const DiagonalMatrix& dl,
                        const DiagonalMatrix& dr, const std::string& out_name) {
  require_diag(dl, a.n_rows(), "left");
  require_diag(dr, a.n_cols(), "right");
  MatrixMeta meta = a.meta;
  meta.name = out_or_temp(rt, out_name, "scaled");
  meta.symmetric = a.meta.symmetric && dl.entries == dr.entries;
  return map_blocks(rt, meta, "diag_scale:" + meta.name, [&](const BlockId& id) {
    Block x = read_block(a, id);
    const std::size_t r0 = meta.row_offset(id.row), c0 = meta.col_offset(id.col);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) x(r, c) = dl[r0 + r] * x(r, c) * dr[c0 + c];
    return x;
  });
}

MatrixHandle scale_add_identity(Runtime& rt, const MatrixHandle& a, double alpha, double beta,
                                const std::string& out_name) {
  require_square(a, "add_identity");
  MatrixMeta meta = a.meta;
  meta.name = out_or_temp(rt, out_name, "shifted");
  return map_blocks(rt, meta, "add_identity:" + meta.name, [&](const BlockId& id) {
    Block x = read_block(a, id);
    for (double& v : x.values) v *= alpha;
    if (id.row == id.col)
      for (std::size_t r = 0; r < x.rows; ++r) x(r, r) += beta;
    return x;
  });
}

MatrixHandle add_diagonal(Runtime& rt, const MatrixHandle& a, double alpha, const DiagonalMatrix& v,
                          const std::string& out_name) {
  require_square(a, "add_diagonal");
  require_diag(v, a.n_rows(), "added");
  MatrixMeta meta = a.meta;
  meta.name = out_or_temp(rt, out_name, "shifted");
  return map_blocks(rt, meta, "add_diagonal:" + meta.name, [&](const BlockId& id) {
    Block x = read_block(a, id);
    for (double& val : x.values) val *= alpha;
    if (id.row == id.col) {
      const std::size_t r0 = meta.row_offset(id.row);
      for (std::size_t r = 0; r < x.rows; ++r) x(r, r) += v[r0 + r];
    }
    return x;
  });
}

MatrixHandle laplacian(Runtime& rt, const MatrixHandle& a, const std::string& out_name) {
  require_square(a, "laplacian");
  const DiagonalMatrix d = degrees(rt, a);
  MatrixMeta meta = a.meta;
  meta.name = out_or_temp(rt, out_name, "laplacian");
  return map_blocks(rt, meta, "laplacian:" + meta.name, [&](const BlockId& id) {
    Block x = read_block(a, id);
    for (double& v : x.values) v = -v;
    if (id.row == id.col) {
      const std::size_t r0 = meta.row_offset(id.row);
      for (std::size_t r = 0; r < x.rows; ++r) x(r, r) += d[r0 + r];
    }
    return x;
  });
}

}  // namespace caddelag
