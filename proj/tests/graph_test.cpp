#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pecons/graph.hpp"
#include "test_support.hpp"

namespace pecons {
namespace {

using testing::complete_graph;
using testing::nonzero_eigenvalues;
using testing::example_graph;
using testing::path_graph;
using testing::random_connected_graph;

TEST(BuildGraph, KeepsEdgeOrder) {
  const Graph g = example_graph();
  EXPECT_EQ(g.vertex_count(), 4);
  ASSERT_EQ(g.edge_count(), 5u);
  EXPECT_EQ(g.edge(3), (Edge{2, 4}));
  EXPECT_EQ(g.edge(4), (Edge{1, 3}));

  EXPECT_EQ(build_graph(2, {{1, 2}}).edge_count(), 1u);
  EXPECT_EQ(build_graph(3, {{1, 2}, {2, 3}, {1, 3}}).edge_count(), 3u);
  EXPECT_EQ(build_graph(1, {}).edge_count(), 0u);
}

TEST(BuildGraph, RejectsInvalidEdges) {
  auto code_of = [](int n, std::vector<Edge> edges) {
    try {
      (void)build_graph(n, std::move(edges));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of(3, {{1, 2}, {2, 2}}), ErrorCode::SelfLoop);
  EXPECT_EQ(code_of(3, {{1, 2}, {2, 1}}), ErrorCode::DuplicateEdge);
  EXPECT_EQ(code_of(3, {{1, 4}}), ErrorCode::VertexOutOfRange);
  EXPECT_EQ(code_of(3, {{0, 1}}), ErrorCode::VertexOutOfRange);
  EXPECT_EQ(code_of(0, {}), ErrorCode::InvalidArgument);

  try {
    (void)build_graph(4, {{1, 2}, {2, 3}, {3, 2}});
    FAIL();
  } catch (const Error& e) {
    ASSERT_TRUE(e.index().has_value());
    EXPECT_EQ(*e.index(), 2u);
  }
}

TEST(Incidence, LowerIndexIsTail) {
  const auto single = orient_and_incidence(build_graph(2, {{2, 1}}));
  EXPECT_EQ(single.D(0, 0), -1.0);
  EXPECT_EQ(single.D(1, 0), 1.0);

  const auto tri = orient_and_incidence(build_graph(3, {{1, 2}, {2, 3}, {1, 3}}));
  Eigen::MatrixXd expected(3, 3);
  // clang-format off
  expected << -1,  0, -1,
               1, -1,  0,
               0,  1,  1;
  // clang-format on
  EXPECT_EQ(tri.D, expected);
}

TEST(Incidence, ExampleLaplacianMatchesReferenceMatrix) {
  // Reference incidence matrix for the 4-agent example (its own orientation).
  Eigen::MatrixXd reference(4, 5);
  // clang-format off
  reference <<  1,  0,  0,  0,  1,
               -1,  1,  0, -1,  0,
                0, -1,  1,  0, -1,
                0,  0, -1,  1,  0;
  // clang-format on
  const auto inc = orient_and_incidence(example_graph());
  EXPECT_EQ(inc.D * inc.D.transpose(), reference * reference.transpose());
  // Columns agree up to sign.
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_TRUE(inc.D.col(j) == reference.col(j) || inc.D.col(j) == -reference.col(j)) << j;
  }
}

TEST(Laplacian, WeightedExamples) {
  const auto single = orient_and_incidence(build_graph(2, {{1, 2}}));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, -1, -1, 1;
  EXPECT_EQ(weighted_graph_laplacian(single, Eigen::VectorXd::Ones(1)), expected);

  const auto inc = orient_and_incidence(example_graph());
  EXPECT_TRUE(weighted_graph_laplacian(inc, Eigen::VectorXd::Zero(5)).isZero());

  const Eigen::MatrixXd L = weighted_graph_laplacian(inc, Eigen::VectorXd::Ones(5));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-12);
  EXPECT_GT(es.eigenvalues()[1], 1e-9);
  EXPECT_TRUE((L.rowwise().sum()).isZero(1e-14));
}

TEST(Laplacian, RejectsNegativeWeights) {
  const auto inc = orient_and_incidence(example_graph());
  Eigen::VectorXd w = Eigen::VectorXd::Ones(5);
  w[3] = -0.1;
  try {
    (void)weighted_graph_laplacian(inc, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeWeight);
  }
  EXPECT_THROW((void)weighted_graph_laplacian(inc, Eigen::VectorXd::Ones(4)), Error);
}

TEST(EdgeLaplacian, DirectProductOracle) {
  EXPECT_EQ(edge_laplacian(orient_and_incidence(build_graph(2, {{1, 2}}))),
            Eigen::MatrixXd::Constant(1, 1, 2.0));

  const auto tri = orient_and_incidence(build_graph(3, {{1, 2}, {2, 3}, {1, 3}}));
  const Eigen::MatrixXd Le = edge_laplacian(tri);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (Eigen::Index r = 0; r < 3; ++r) dot += tri.D(r, i) * tri.D(r, j);
      EXPECT_EQ(Le(i, j), dot);
      if (i == j) {
        EXPECT_EQ(Le(i, j), 2.0);
      } else {
        EXPECT_EQ(std::abs(Le(i, j)), 1.0);
      }
    }
  }

  const auto inc = orient_and_incidence(example_graph());
  const auto edge_side = nonzero_eigenvalues(edge_laplacian(inc));
  const auto node_side = nonzero_eigenvalues(inc.D * inc.D.transpose());
  ASSERT_EQ(edge_side.size(), node_side.size());
  for (std::size_t i = 0; i < edge_side.size(); ++i) EXPECT_NEAR(edge_side[i], node_side[i], 1e-9);
}

TEST(AlgebraicConnectivity, KnownSpectra) {
  EXPECT_NEAR(algebraic_connectivity(build_graph(4, {{1, 2}, {3, 4}})), 0.0, 1e-12);
  for (int n = 2; n <= 7; ++n) EXPECT_NEAR(algebraic_connectivity(complete_graph(n)), n, 1e-10);
  EXPECT_GT(algebraic_connectivity(example_graph()), kConnectivityTolerance);
  EXPECT_FALSE(is_connected(build_graph(4, {{1, 2}, {3, 4}})));
  EXPECT_TRUE(is_connected(build_graph(1, {})));
  try {
    (void)algebraic_connectivity(build_graph(1, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewVertices);
  }
}

TEST(Partition, PathHasNoCycles) {
  const auto part = partition_spanning_tree(orient_and_incidence(path_graph(4)));
  EXPECT_EQ(part.p, 3u);
  EXPECT_EQ(part.cycle_count(), 0u);
  EXPECT_EQ(part.T.size(), 0);
  EXPECT_EQ(part.R, Eigen::MatrixXd::Identity(3, 3));
}

TEST(Partition, TriangleCycleIsSumOfTreeEdges) {
  const auto part = partition_spanning_tree(orient_and_incidence(build_graph(3, {{1, 2}, {2, 3}, {1, 3}})));
  EXPECT_EQ(part.tree_edges(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(part.cycle_edges(), (std::vector<std::size_t>{2}));
  ASSERT_EQ(part.T.rows(), 2);
  ASSERT_EQ(part.T.cols(), 1);
  EXPECT_NEAR(part.T(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(part.T(1, 0), 1.0, 1e-12);
  EXPECT_LT((part.D_T * part.T - part.D_C).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Partition, ExampleGraphDfsTrace) {
  // DFS from 1: 1 -> 2 via {1,2}; 2 -> 3 via {2,3}; 3 -> 4 via {3,4}.
  const auto part = partition_spanning_tree(orient_and_incidence(example_graph()));
  EXPECT_EQ(part.p, 3u);
  EXPECT_EQ(part.perm, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_LT((part.D_T * part.T - part.D_C).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(part.R.leftCols(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(part.R.rightCols(2), part.T);
}

TEST(Partition, DiscoveryOrderDiffersFromInputOrder) {
  // Listed backwards; DFS visits 1 -> 2 -> 3 -> 4.
  const auto part =
      partition_spanning_tree(orient_and_incidence(build_graph(4, {{3, 4}, {2, 3}, {1, 3}, {1, 2}})));
  EXPECT_EQ(part.tree_edges(), (std::vector<std::size_t>{3, 1, 0}));
  EXPECT_EQ(part.cycle_edges(), (std::vector<std::size_t>{2}));
}

TEST(Partition, RejectsDisconnected) {
  try {
    (void)partition_spanning_tree(orient_and_incidence(build_graph(4, {{1, 2}, {3, 4}})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DisconnectedGraph);
  }
}

TEST(TreeSpectrum, SingleEdgeAndPath) {
  const auto one = tree_spectrum(partition_spanning_tree(orient_and_incidence(build_graph(2, {{1, 2}}))));
  EXPECT_NEAR(one.Lambda[0], 2.0, 1e-14);
  EXPECT_NEAR(one.Gamma(0, 0), 1.0, 1e-14);

  // tridiag(-1, 2, -1) of size 3: 2 - 2 cos(j pi / 4).
  for (const Graph& g : {path_graph(4), example_graph()}) {
    const auto s = tree_spectrum(partition_spanning_tree(orient_and_incidence(g)));
    ASSERT_EQ(s.Lambda.size(), 3);
    EXPECT_NEAR(s.Lambda[0], 2.0 - std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(s.Lambda[1], 2.0, 1e-12);
    EXPECT_NEAR(s.Lambda[2], 2.0 + std::sqrt(2.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.lambda_min, s.Lambda[0]);
    EXPECT_DOUBLE_EQ(s.norm_Lambda(), s.Lambda[2]);
    for (Eigen::Index j = 0; j < 3; ++j) {
      Eigen::Index imax = 0;
      s.Gamma.col(j).cwiseAbs().maxCoeff(&imax);
      EXPECT_GT(s.Gamma(imax, j), 0.0);
    }
  }
}

// Randomised structural identities over connected graphs with n <= 12.
TEST(GraphProperties, RandomConnectedGraphs) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_connected_graph(rng, 2, 12);
    const auto inc = orient_and_incidence(g);
    SCOPED_TRACE(trial);

    EXPECT_TRUE(inc.D.colwise().sum().isZero(0.0));
    for (Eigen::Index j = 0; j < inc.D.cols(); ++j) {
      EXPECT_EQ(inc.D.col(j).maxCoeff(), 1.0);
      EXPECT_EQ(inc.D.col(j).minCoeff(), -1.0);
      EXPECT_EQ(inc.D.col(j).cwiseAbs().sum(), 2.0);
    }

    const auto node_side = nonzero_eigenvalues(inc.D * inc.D.transpose());
    const auto edge_side = nonzero_eigenvalues(edge_laplacian(inc));
    ASSERT_EQ(node_side.size(), edge_side.size());
    for (std::size_t i = 0; i < node_side.size(); ++i) EXPECT_NEAR(node_side[i], edge_side[i], 1e-9);

    const auto part = partition_spanning_tree(inc);
    EXPECT_EQ(part.p, static_cast<std::size_t>(g.vertex_count() - 1));
    if (part.cycle_count() > 0) {
      EXPECT_LT((part.D_T * part.T - part.D_C).cwiseAbs().maxCoeff(), 1e-10);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(part.D_T);
    EXPECT_EQ(lu.rank(), static_cast<Eigen::Index>(part.p));

    const auto s = tree_spectrum(part);
    const auto p = static_cast<Eigen::Index>(part.p);
    EXPECT_LT((s.Gamma.transpose() * s.Gamma - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_LT((s.Gamma * s.Lambda.asDiagonal() * s.Gamma.transpose() - part.D_T.transpose() * part.D_T)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
    EXPECT_GT(s.lambda_min, 0.0);

    const Eigen::VectorXd w = testing::random_vector(rng, inc.D.cols(), 0.0, 3.0);
    const Eigen::MatrixXd L = weighted_graph_laplacian(inc, w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);

    // Flipping column signs changes the orientation only.
    OrientedIncidence flipped = inc;
    for (Eigen::Index j = 0; j < flipped.D.cols(); ++j) {
      if (std::bernoulli_distribution(0.5)(rng)) flipped.D.col(j) *= -1.0;
    }
    EXPECT_LT((weighted_graph_laplacian(flipped, w) - L).cwiseAbs().maxCoeff(), 1e-12);
    const auto flipped_edge = nonzero_eigenvalues(edge_laplacian(flipped));
    ASSERT_EQ(flipped_edge.size(), edge_side.size());
    for (std::size_t i = 0; i < edge_side.size(); ++i) EXPECT_NEAR(flipped_edge[i], edge_side[i], 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fl(flipped.D * flipped.D.transpose(),
                                                      Eigen::EigenvaluesOnly);
    EXPECT_NEAR(fl.eigenvalues()[1], algebraic_connectivity(g), 1e-9);
  }
}

}  // namespace
}  // namespace pecons
