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

#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "caddelag/anomaly.hpp"
#include "caddelag/oracle.hpp"
#include "caddelag/synthgen.hpp"
#include "test_util.hpp"

namespace caddelag {
namespace {

using testing::ScratchDir;

class Anomaly : public ::testing::Test {
 protected:
  ScratchDir dir{"anomaly"};
  Runtime rt{dir.path(), 4};
  MatrixHandle put(const Eigen::MatrixXd& m, std::size_t p) {
    return from_dense(rt, rt.temp_name("g"), m, p, true);
  }
  Eigen::MatrixXd toy2() {
    Eigen::MatrixXd a = testing::unit_triangle();
    a(1, 2) = a(2, 1) = 2.0;
    return a;
  }
};

TEST_F(Anomaly, IdenticalGraphsScoreZero) {
  const auto g = testing::random_adjacency(12, 1, 0.6);
  const auto a1 = put(g, 5), a2 = put(g, 5);
  const auto gp = make_graph_pair(rt, a1, a2);
  EmbeddingParams p;
  const auto z1 = commute_time_embedding(rt, a1, p), z2 = commute_time_embedding(rt, a2, p);
  for (const BlockId& id : a1.meta.block_ids())
    for (double v : delta_e_block(gp, z1, z2, id).values) EXPECT_EQ(v, 0.0);
  const auto rep = detect(rt, gp, z1, z2, {.top_nodes = 12, .top_edges = 10, .delta = {}});
  for (double f : rep.scores) EXPECT_EQ(f, 0.0);
  EXPECT_TRUE(rep.edges.empty());
  EXPECT_EQ(rep.nodes.front().id, 0u);
}

TEST_F(Anomaly, ToyPairAgainstExactCommuteTimes) {
  const auto a1 = put(testing::unit_triangle(), 2), a2 = put(toy2(), 2);
  const auto gp = make_graph_pair(rt, a1, a2);
  const auto z1 = oracle::exact_embedding(testing::unit_triangle(), a1.name());
  const auto z2 = oracle::exact_embedding(toy2(), a2.name());
  const auto de = to_dense(delta_e(rt, gp, z1, z2));
  const auto c1 = oracle::exact_commute_times(testing::unit_triangle());
  const auto c2 = oracle::exact_commute_times(toy2());
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      if ((i == 1 && j == 2) || (i == 2 && j == 1)) {
        EXPECT_NEAR(de(i, j), std::abs(c2(1, 2) - c1(1, 2)), 1e-12);
        EXPECT_GT(de(i, j), 0.0);
      } else {
        EXPECT_EQ(de(i, j), 0.0);
      }
    }
  EXPECT_EQ(de(1, 2), de(2, 1));

  oracle::CadOptions co;
  co.top_nodes = 3;
  const auto ref = oracle::oracle_cad(testing::unit_triangle(), toy2(), co);
  const auto rep = detect(rt, gp, z1, z2, {.top_nodes = 3, .top_edges = 100, .delta = {}});
  ASSERT_EQ(rep.nodes.size(), ref.nodes.size());
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(rep.nodes[r].id, ref.nodes[r].id);
    EXPECT_NEAR(rep.nodes[r].score, ref.nodes[r].score, 1e-12);
  }
  ASSERT_EQ(rep.edges.size(), 1u);
  EXPECT_EQ(rep.edges[0].i, 1u);
  EXPECT_EQ(rep.edges[0].j, 2u);
}

TEST_F(Anomaly, NodeScoresOfSingleEntry) {
  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(5, 5);
  de(1, 3) = de(3, 1) = 2.5;
  const auto f = node_scores(rt, put(de, 2));
  EXPECT_EQ(f, (DenseVector{0, 2.5, 0, 2.5, 0}));
  EXPECT_EQ(node_scores(rt, put(Eigen::MatrixXd::Zero(4, 4), 3)), DenseVector(4, 0.0));
}

TEST_F(Anomaly, TopKTieRules) {
  const auto all = top_k(DenseVector(5, 1.0), 3);
  EXPECT_EQ(all[0].id, 0u);
  EXPECT_EQ(all[2].id, 2u);
  EXPECT_EQ(all[2].rank, 3u);
  const auto full = top_k({0.5, 3.0, 3.0, 1.0}, 4);
  std::vector<std::size_t> ids;
  for (const auto& r : full) ids.push_back(r.id);
  EXPECT_EQ(ids, (std::vector<std::size_t>{1, 2, 3, 0}));
  EXPECT_THROW(top_k({1.0}, 0), Error);
  EXPECT_THROW(top_k({1.0}, 2), Error);
}

TEST_F(Anomaly, TopEdgesTieRules) {
  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(6, 6);
  auto set = [&](int i, int j, double v) { de(i, j) = de(j, i) = v; };
  set(4, 5, 1.0);
  set(0, 3, 2.0);
  set(1, 2, 1.0);
  set(0, 5, 1.0);
  const auto e = top_edges(rt, put(de, 4), 3);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ((std::pair{e[0].i, e[0].j}), (std::pair<std::size_t, std::size_t>{0, 3}));
  EXPECT_EQ((std::pair{e[1].i, e[1].j}), (std::pair<std::size_t, std::size_t>{0, 5}));
  EXPECT_EQ((std::pair{e[2].i, e[2].j}), (std::pair<std::size_t, std::size_t>{1, 2}));
}

TEST_F(Anomaly, SparsePathMatchesDensePathBitwise) {
  SyntheticSpec spec;
  spec.n = 60;
  spec.seed = 2;
  spec.block_size = 7;
  const auto pair = generate_pair(rt, spec);
  const auto gp = make_graph_pair(rt, pair.a1, pair.a2);
  EmbeddingParams p;
  p.seed = 5;
  const auto z1 = commute_time_embedding(rt, pair.a1, p), z2 = commute_time_embedding(rt, pair.a2, p);
  const auto sparse = node_scores(rt, delta_e(rt, gp, z1, z2));
  const auto dense = node_scores(rt, delta_e(rt, gp, z1, z2, {.tolerance = 0.0, .dense_path = true}));
  EXPECT_EQ(sparse, dense);
  const auto tol = node_scores(rt, delta_e(rt, gp, z1, z2, {.tolerance = 1e9, .dense_path = false}));
  EXPECT_EQ(tol, DenseVector(60, 0.0));
}

TEST_F(Anomaly, PermutationInvariance) {
  const auto g1 = testing::random_adjacency(20, 3, 0.7);
  Eigen::MatrixXd g2 = g1;
  g2(2, 7) = g2(7, 2) = g1(2, 7) + 1.0;
  g2(11, 4) = g2(4, 11) = 0.0;
  Eigen::VectorXi perm(20);
  for (int i = 0; i < 20; ++i) perm(i) = (7 * i + 3) % 20;
  const Eigen::PermutationMatrix<Eigen::Dynamic> pm(perm);
  const Eigen::MatrixXd h1 = pm * g1 * pm.transpose(), h2 = pm * g2 * pm.transpose();

  const auto a1 = put(g1, 6), a2 = put(g2, 6), b1 = put(h1, 6), b2 = put(h2, 6);
  EmbeddingParams p;
  auto z1 = commute_time_embedding(rt, a1, p), z2 = commute_time_embedding(rt, a2, p);
  auto w1 = z1, w2 = z2;
  w1.z = pm * Eigen::MatrixXd(z1.z);
  w2.z = pm * Eigen::MatrixXd(z2.z);
  w1.source = b1.name();
  w2.source = b2.name();
  const auto f = node_scores(rt, delta_e(rt, make_graph_pair(rt, a1, a2), z1, z2));
  const auto fp = node_scores(rt, delta_e(rt, make_graph_pair(rt, b1, b2), w1, w2));
  for (int i = 0; i < 20; ++i)
    EXPECT_NEAR(fp[static_cast<std::size_t>(perm(i))], f[static_cast<std::size_t>(i)],
                1e-12 * std::max(1.0, f[static_cast<std::size_t>(i)]));
}

TEST_F(Anomaly, ProvenanceChecked) {
  const auto a1 = put(testing::unit_triangle(), 2), a2 = put(toy2(), 2);
  const auto gp = make_graph_pair(rt, a1, a2);
  const auto z1 = oracle::exact_embedding(testing::unit_triangle(), a1.name());
  const auto z2 = oracle::exact_embedding(toy2(), a2.name());
  try {
    delta_e(rt, gp, z2, z1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProvenance);
  }
}

TEST_F(Anomaly, ReportJson) {
  AnomalyReport rep;
  rep.parameters = {{"seed", 1}};
  rep.scores = {0.0, 2.0};
  rep.nodes = top_k(rep.scores, 2);
  rep.edges = {{0, 1, 2.0}};
  const auto j = rep.to_json();
  EXPECT_EQ(j["nodes"][0]["id"], 1);
  EXPECT_EQ(j["nodes"][0]["rank"], 1);
  EXPECT_EQ(j["edges"][0]["delta_e"], 2.0);
  EXPECT_EQ(j["parameters"]["seed"], 1);
}

TEST_F(Anomaly, PlantedNodesScoreHigher) {
  SyntheticSpec spec;
  spec.n = 500;
  spec.seed = 21;
  const auto pair = generate_pair(rt, spec);
  const auto gp = make_graph_pair(rt, pair.a1, pair.a2);
  EmbeddingParams p;
  p.seed = 8;
  const auto z1 = commute_time_embedding(rt, pair.a1, p), z2 = commute_time_embedding(rt, pair.a2, p);
  const auto rep = detect(rt, gp, z1, z2, {.top_nodes = 10, .top_edges = 10, .delta = {}});
  // Top decile of planted mass versus the rest.
  std::vector<double> mass = pair.truth.planted_mass;
  std::vector<double> sorted = mass;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cut = sorted[spec.n / 10 - 1];
  double sp = 0, sn = 0;
  int np = 0, nn = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (mass[i] >= cut) {
      sp += rep.scores[i];
      ++np;
    } else {
      sn += rep.scores[i];
      ++nn;
    }
  }
  EXPECT_GT(sp / np, sn / nn);
}

}  // namespace
}  // namespace caddelag
