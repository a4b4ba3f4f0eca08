#pragma once

/**
 * Undirected graphs, their oriented incidence matrix, Laplacians and the
 * spanning-tree / cycle split that the reduced edge dynamics are built on.
 *
 * Vertices are 1-indexed in the public API (matching how graphs are written
 * in configuration files); matrix rows are 0-indexed.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pecons/error.hpp"

namespace pecons {

/// Threshold on the second Laplacian eigenvalue above which a graph counts as
/// connected.
inline constexpr double kConnectivityTolerance = 1e-9;

struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class Graph {
 public:
  Graph() = default;

  int vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_.at(i); }

 private:
  friend Graph build_graph(int n, std::vector<Edge> edges);

  int n_ = 0;
  std::vector<Edge> edges_;
};

/// Validates and stores the edge list. Edge order is preserved because the
/// i-th weight profile belongs to the i-th edge.
inline Graph build_graph(int n, std::vector<Edge> edges) {
  if (n < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "vertex count must be >= 1, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u < 1 || u > n || v < 1 || v > n) {
      throw Error(ErrorCode::VertexOutOfRange,
                  "edge " + std::to_string(i) + " {" + std::to_string(u) +
                      "," + std::to_string(v) + "} references a vertex outside [1," +
                      std::to_string(n) + "]",
                  i);
    }
    if (u == v) {
      throw Error(ErrorCode::SelfLoop,
                  "edge " + std::to_string(i) + " is a self-loop on vertex " +
                      std::to_string(u),
                  i);
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto [a, b] = edges[j];
      if ((a == u && b == v) || (a == v && b == u)) {
        throw Error(ErrorCode::DuplicateEdge,
                    "edge " + std::to_string(i) + " {" + std::to_string(u) + "," +
                        std::to_string(v) + "} duplicates edge " + std::to_string(j),
                    i);
      }
    }
  }
  Graph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  return g;
}

/// Graph together with its incidence matrix D (n x m). Tail of each edge is
/// its lower-indexed endpoint (-1), head the higher-indexed one (+1).
struct OrientedIncidence {
  Graph graph;
  Eigen::MatrixXd D;
};

inline OrientedIncidence orient_and_incidence(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  const auto m = static_cast<Eigen::Index>(g.edge_count());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& e = g.edge(static_cast<std::size_t>(j));
    D(std::min(e.u, e.v) - 1, j) = -1.0;
    D(std::max(e.u, e.v) - 1, j) = 1.0;
  }
  return {g, std::move(D)};
}

/// D diag(w) D^T.
inline Eigen::MatrixXd weighted_graph_laplacian(const OrientedIncidence& inc,
                                                const Eigen::VectorXd& w) {
  if (w.size() != inc.D.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "weight vector has " + std::to_string(w.size()) + " entries, graph has " +
                    std::to_string(inc.D.cols()) + " edges");
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) {
      throw Error(ErrorCode::NegativeWeight,
                  "weight " + std::to_string(i) + " is negative or NaN",
                  static_cast<std::size_t>(i));
    }
  }
  return inc.D * w.asDiagonal() * inc.D.transpose();
}

/// D^T D.
inline Eigen::MatrixXd edge_laplacian(const OrientedIncidence& inc) {
  return inc.D.transpose() * inc.D;
}

/// Second-smallest eigenvalue of the unweighted graph Laplacian.
inline double algebraic_connectivity(const Graph& g) {
  if (g.vertex_count() < 2) {
    throw Error(ErrorCode::TooFewVertices,
                "algebraic connectivity needs at least 2 vertices");
  }
  const auto inc = orient_and_incidence(g);
  const Eigen::MatrixXd L = inc.D * inc.D.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[1];
}

inline bool is_connected(const Graph& g) {
  return g.vertex_count() < 2 || algebraic_connectivity(g) > kConnectivityTolerance;
}

/// Edge permutation putting a spanning tree first, plus the matrices that
/// express cycle edges through tree edges.
struct TreeCyclePartition {
  OrientedIncidence incidence;
  /// perm[k] is the original edge index placed at position k.
  std::vector<std::size_t> perm;
  std::size_t p = 0;
  Eigen::MatrixXd D_T;  ///< n x p
  Eigen::MatrixXd D_C;  ///< n x (m - p)
  Eigen::MatrixXd T;    ///< p x (m - p), D_T * T = D_C
  Eigen::MatrixXd R;    ///< p x m, [I_p | T]

  std::size_t edge_count() const noexcept { return perm.size(); }
  std::size_t cycle_count() const noexcept { return perm.size() - p; }
  std::vector<std::size_t> tree_edges() const {
    return {perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(p)};
  }
  std::vector<std::size_t> cycle_edges() const {
    return {perm.begin() + static_cast<std::ptrdiff_t>(p), perm.end()};
  }
};

namespace detail {

/// Adjacency lists sorted by neighbour vertex; entries are (neighbour, edge).
inline std::vector<std::vector<std::pair<int, std::size_t>>> sorted_adjacency(
    int n, const std::vector<Edge>& edges, const std::vector<bool>* mask = nullptr) {
  std::vector<std::vector<std::pair<int, std::size_t>>> adj(static_cast<std::size_t>(n) + 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (mask != nullptr && !(*mask)[i]) continue;
    adj[static_cast<std::size_t>(edges[i].u)].emplace_back(edges[i].v, i);
    adj[static_cast<std::size_t>(edges[i].v)].emplace_back(edges[i].u, i);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

/// Depth-first search from vertex 1; returns tree edges in discovery order.
/// `mask` restricts the search to a subset of edges.
inline std::vector<std::size_t> dfs_tree_edges(int n, const std::vector<Edge>& edges,
                                               const std::vector<bool>* mask = nullptr) {
  const auto adj = sorted_adjacency(n, edges, mask);
  std::vector<bool> visited(static_cast<std::size_t>(n) + 1, false);
  std::vector<std::size_t> tree;
  // (vertex, next adjacency position)
  std::vector<std::pair<int, std::size_t>> stack{{1, 0}};
  visited[1] = true;
  while (!stack.empty()) {
    auto& [v, pos] = stack.back();
    const auto& list = adj[static_cast<std::size_t>(v)];
    if (pos == list.size()) {
      stack.pop_back();
      continue;
    }
    const auto [w, e] = list[pos++];
    if (!visited[static_cast<std::size_t>(w)]) {
      visited[static_cast<std::size_t>(w)] = true;
      tree.push_back(e);
      stack.emplace_back(w, 0);
    }
  }
  return tree;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& M,
                                      const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = M.col(static_cast<Eigen::Index>(cols[k]));
  }
  return out;
}

}  // namespace detail

/// Spanning tree by DFS from vertex 1 (ascending neighbour order); tree edges
/// first in discovery order, then cycle edges in original order.
inline TreeCyclePartition partition_spanning_tree(const OrientedIncidence& inc) {
  const Graph& g = inc.graph;
  if (!is_connected(g)) {
    throw Error(ErrorCode::DisconnectedGraph,
                "graph is disconnected; no spanning tree exists");
  }
  TreeCyclePartition part;
  part.incidence = inc;
  part.perm = detail::dfs_tree_edges(g.vertex_count(), g.edges());
  part.p = part.perm.size();
  if (part.p != static_cast<std::size_t>(g.vertex_count() - 1)) {
    throw Error(ErrorCode::DisconnectedGraph, "spanning tree search did not reach every vertex");
  }
  std::vector<bool> in_tree(g.edge_count(), false);
  for (auto e : part.perm) in_tree[e] = true;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (!in_tree[e]) part.perm.push_back(e);
  }

  part.D_T = detail::select_columns(inc.D, part.tree_edges());
  part.D_C = detail::select_columns(inc.D, part.cycle_edges());

  const auto p = static_cast<Eigen::Index>(part.p);
  const auto c = static_cast<Eigen::Index>(part.cycle_count());
  if (c > 0) {
    const Eigen::MatrixXd gram = part.D_T.transpose() * part.D_T;
    part.T = gram.ldlt().solve(part.D_T.transpose() * part.D_C);
    const double residual = (part.D_T * part.T - part.D_C).cwiseAbs().maxCoeff();
    if (!(residual < 1e-8)) {
      throw Error(ErrorCode::NumericalFailure,
                  "cycle projection residual " + std::to_string(residual) + " too large");
    }
  } else {
    part.T = Eigen::MatrixXd::Zero(p, 0);
  }
  part.R.resize(p, p + c);
  part.R << Eigen::MatrixXd::Identity(p, p), part.T;
  return part;
}

/// Eigendecomposition of the tree edge Laplacian D_T^T D_T = Gamma diag(Lambda) Gamma^T.
struct TreeSpectrum {
  Eigen::MatrixXd Gamma;
  Eigen::VectorXd Lambda;  ///< ascending
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  /// Spectral norm of diag(Lambda).
  double norm_Lambda() const noexcept { return lambda_max; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(Lambda.size()); }
};

inline TreeSpectrum tree_spectrum(const TreeCyclePartition& part) {
  if (part.p == 0) {
    throw Error(ErrorCode::InvalidArgument, "tree spectrum needs at least one tree edge");
  }
  const Eigen::MatrixXd Le = part.D_T.transpose() * part.D_T;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Le);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "eigensolver did not converge");
  }
  TreeSpectrum s;
  s.Lambda = es.eigenvalues();
  s.Gamma = es.eigenvectors();
  // Sign convention: largest-magnitude entry of each eigenvector is positive.
  for (Eigen::Index j = 0; j < s.Gamma.cols(); ++j) {
    Eigen::Index imax = 0;
    s.Gamma.col(j).cwiseAbs().maxCoeff(&imax);
    if (s.Gamma(imax, j) < 0.0) s.Gamma.col(j) *= -1.0;
  }
  s.lambda_min = s.Lambda.minCoeff();
  s.lambda_max = s.Lambda.maxCoeff();
  if (!(s.lambda_min > 0.0)) {
    throw Error(ErrorCode::NumericalFailure, "tree edge Laplacian is not positive definite");
  }
  const double residual =
      (s.Gamma * s.Lambda.asDiagonal() * s.Gamma.transpose() - Le).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8)) {
    throw Error(ErrorCode::NumericalFailure,
                "spectral reconstruction residual " + std::to_string(residual));
  }
  return s;
}

}  // namespace pecons
