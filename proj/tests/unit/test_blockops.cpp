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

#include <cmath>

#include <gtest/gtest.h>

#include "caddelag/blockops.hpp"
#include "caddelag/oracle.hpp"
#include "test_util.hpp"

namespace caddelag {
namespace {

using testing::max_relative_error;
using testing::random_matrix;
using testing::ScratchDir;

class BlockOps : public ::testing::Test {
 protected:
  ScratchDir dir{"blockops"};
  Runtime rt{dir.path(), 4};
};

TEST_F(BlockOps, MultiplyByIdentity) {
  const auto m = random_matrix(6, 6, 1);
  const auto a = from_dense(rt, "a", m, 2, false);
  const auto i = identity(rt, "i", 6, 2);
  EXPECT_EQ(to_dense(multiply(rt, a, i, "ai")), m);
}

TEST_F(BlockOps, MultiplyRaggedMatchesOracle) {
  const auto ma = random_matrix(64, 64, 2), mb = random_matrix(64, 64, 3);
  const auto c = multiply(rt, from_dense(rt, "a", ma, 7, false), from_dense(rt, "b", mb, 7, false));
  EXPECT_LE(max_relative_error(to_dense(c), oracle::dense_multiply(ma, mb)), 1e-12);
}

TEST_F(BlockOps, MultiplyIoCountsBetaFour) {
  const auto a = from_dense(rt, "a", random_matrix(16, 16, 4), 4, false);
  rt.clear_history();
  const auto c = multiply(rt, a, a);
  const auto& m = rt.history().at(0);
  EXPECT_EQ(m.blocks_written, 16u);
  EXPECT_EQ(m.blocks_read, 128u);
  EXPECT_EQ(m.bytes_written, 16u * 16u * 8u);
  EXPECT_TRUE(validate(c).ok());
}

TEST_F(BlockOps, MultiplyShapeErrors) {
  const auto a = from_dense(rt, "a", random_matrix(6, 6, 1), 2, false);
  const auto b = from_dense(rt, "b", random_matrix(6, 6, 1), 3, false);
  const auto c = from_dense(rt, "c", random_matrix(4, 4, 1), 2, false);
  EXPECT_THROW(multiply(rt, a, b), Error);
  EXPECT_THROW(multiply(rt, a, c), Error);
}

TEST_F(BlockOps, MatvecIdentity) {
  const auto i = identity(rt, "i", 5, 2);
  const DenseVector x{1, -2, 3, 0.5, 7};
  EXPECT_EQ(matvec(rt, i, x), x);
}

TEST_F(BlockOps, MatvecAllOnes) {
  const auto a = from_dense(rt, "ones", Eigen::MatrixXd::Ones(3, 3), 2, true);
  EXPECT_EQ(matvec(rt, a, DenseVector{1, 2, 3}), (DenseVector{6, 6, 6}));
}

TEST_F(BlockOps, MatvecMatchesOracle) {
  const auto m = random_matrix(50, 50, 5);
  const Eigen::VectorXd x = random_matrix(50, 1, 6);
  const DenseVector y = matvec(rt, from_dense(rt, "a", m, 8, false), DenseVector(x.data(), x.data() + 50));
  const Eigen::VectorXd ref = oracle::dense_multiply(m, x);
  EXPECT_LE(max_relative_error(Eigen::Map<const Eigen::VectorXd>(y.data(), 50), ref), 1e-12);
}

TEST_F(BlockOps, MatvecPanelAndBitIdenticalAcrossWorkers) {
  const auto m = random_matrix(40, 40, 7);
  const auto a = from_dense(rt, "a", m, 6, false);
  const Panel x = random_matrix(40, 3, 8);
  const Panel y4 = matvec(rt, a, x);
  rt.set_workers(1);
  const Panel y1 = matvec(rt, a, x);
  EXPECT_EQ(y1, y4);
  EXPECT_LE(max_relative_error(y1, m * Eigen::MatrixXd(x)), 1e-12);
}

TEST_F(BlockOps, Degrees) {
  EXPECT_EQ(degrees(rt, from_dense(rt, "two", testing::two_node(3.5), 1, true)).entries,
            (std::vector<double>{3.5, 3.5}));
  EXPECT_EQ(degrees(rt, from_dense(rt, "tri", testing::unit_triangle(), 2, true)).entries,
            (std::vector<double>{2, 2, 2}));
  const auto g = testing::random_adjacency(100, 9);
  const auto d = degrees(rt, from_dense(rt, "g", g, 13, true));
  const Eigen::VectorXd ref = g.rowwise().sum();
  EXPECT_LE(max_relative_error(Eigen::Map<const Eigen::VectorXd>(d.entries.data(), 100), ref), 1e-12);
}

TEST_F(BlockOps, Elementwise) {
  const auto m = random_matrix(9, 9, 10);
  const auto a = from_dense(rt, "a", m, 4, false);
  const auto ones = from_dense(rt, "ones", Eigen::MatrixXd::Ones(9, 9), 4, true);
  EXPECT_EQ(to_dense(elementwise(rt, a, ones, ElementwiseOp::kHadamard)), m);
  EXPECT_EQ(to_dense(elementwise(rt, a, a, ElementwiseOp::kAbsSub)), Eigen::MatrixXd::Zero(9, 9));
  EXPECT_EQ(to_dense(elementwise(rt, a, ones, ElementwiseOp::kAdd)), (m.array() + 1.0).matrix());
  EXPECT_EQ(to_dense(elementwise(rt, a, ones, ElementwiseOp::kSub)), (m.array() - 1.0).matrix());
  const auto b = from_dense(rt, "b", random_matrix(9, 9, 11), 3, false);
  EXPECT_THROW(elementwise(rt, a, b, ElementwiseOp::kAdd), Error);
}

TEST_F(BlockOps, ToyDeltaEByHand) {
  // |A1 - A2| (.) |C1 - C2| on a 3-node pair with one changed edge.
  Eigen::MatrixXd a2 = testing::unit_triangle();
  a2(1, 2) = a2(2, 1) = 2.0;
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Constant(3, 3, 4.0), c2 = c1;
  c1.diagonal().setZero();
  c2 = c1;
  c2(1, 2) = c2(2, 1) = 2.5;
  const auto da = elementwise(rt, from_dense(rt, "a1", testing::unit_triangle(), 2, true),
                              from_dense(rt, "a2", a2, 2, true), ElementwiseOp::kAbsSub);
  const auto dc = elementwise(rt, from_dense(rt, "c1", c1, 2, true), from_dense(rt, "c2", c2, 2, true),
                              ElementwiseOp::kAbsSub);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
  expect(1, 2) = expect(2, 1) = 1.5;
  EXPECT_EQ(to_dense(elementwise(rt, da, dc, ElementwiseOp::kHadamard)), expect);
}

TEST_F(BlockOps, DiagScale) {
  const auto m = random_matrix(7, 7, 12);
  const auto a = from_dense(rt, "a", m, 3, false);
  EXPECT_EQ(to_dense(diag_scale(rt, a, {std::vector<double>(7, 1.0)}, {std::vector<double>(7, 1.0)})), m);
  const double h = 1.0 / std::sqrt(2.0);
  const auto s = to_dense(diag_scale(rt, from_dense(rt, "tri", testing::unit_triangle(), 2, true),
                                     {std::vector<double>(3, h)}, {std::vector<double>(3, h)}));
  EXPECT_NEAR(s(0, 1), 0.5, 1e-15);
  EXPECT_EQ(s(0, 0), 0.0);
}

TEST_F(BlockOps, NormalizedAdjacencySpectrumBounded) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = testing::random_adjacency(64, 100 + seed, 0.3);
    const auto h = from_dense(rt, rt.temp_name("g"), g, 9, true);
    const auto dh = inverse_sqrt(degrees(rt, h));
    const auto s = to_dense(diag_scale(rt, h, dh, dh));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST_F(BlockOps, InverseSqrtZeroDegree) {
  EXPECT_EQ(inverse_sqrt({{4.0, 0.0}}).entries, (std::vector<double>{0.5, 0.0}));
  EXPECT_THROW(inverse_sqrt({{-1.0}}), Error);
}

TEST_F(BlockOps, Laplacian) {
  const auto l2 = to_dense(laplacian(rt, from_dense(rt, "two", testing::two_node(3.0), 1, true)));
  Eigen::MatrixXd e2(2, 2);
  e2 << 3, -3, -3, 3;
  EXPECT_EQ(l2, e2);
  const auto l3 = to_dense(laplacian(rt, from_dense(rt, "tri", testing::unit_triangle(), 2, true)));
  EXPECT_EQ(l3, 2.0 * Eigen::MatrixXd::Identity(3, 3) - testing::unit_triangle());
  const auto lg = laplacian(rt, from_dense(rt, "g", testing::random_adjacency(30, 13), 7, true));
  for (double r : row_sums(rt, lg)) EXPECT_LE(std::abs(r), 1e-12);
  EXPECT_THROW(laplacian(rt, from_dense(rt, "rect", random_matrix(3, 4, 1), 2, false)), Error);
}

TEST_F(BlockOps, AddIdentityAndDiagonal) {
  const auto m = random_matrix(5, 5, 14);
  const auto a = from_dense(rt, "a", m, 2, false);
  EXPECT_EQ(to_dense(add_identity(rt, a)), m + Eigen::MatrixXd::Identity(5, 5));
  const DiagonalMatrix v{{1, 2, 3, 4, 5}};
  Eigen::MatrixXd expect = 2.0 * m;
  for (int i = 0; i < 5; ++i) expect(i, i) += i + 1;
  EXPECT_EQ(to_dense(add_diagonal(rt, a, 2.0, v)), expect);
}

TEST_F(BlockOps, BlockSizeIndependence) {
  const auto ma = random_matrix(33, 33, 15);
  Eigen::MatrixXd prev;
  for (std::size_t p : {1, 5, 16, 33}) {
    const auto a = from_dense(rt, rt.temp_name("a"), ma, p, false);
    const auto c = to_dense(multiply(rt, a, a));
    if (prev.size()) EXPECT_LE(max_relative_error(c, prev), 1e-13);
    prev = c;
  }
}

}  // namespace
}  // namespace caddelag
