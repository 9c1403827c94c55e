#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "disagg/error.hpp"

namespace disagg {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DiagonalMatrix = Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic>;

template <typename Scalar = double>
struct Edge {
  Index i = 0;
  Index j = 0;
  Scalar w = Scalar(1);
};

/// Weighted, undirected, simple graph on vertices 0..n-1.
///
/// The constructor rejects self-loops, repeated unordered pairs, out-of-range
/// ids and nonpositive weights. Duplicates are an error, never merged.
template <typename Scalar = double>
class WeightedGraph {
 public:
  using EdgeType = Edge<Scalar>;

  WeightedGraph() = default;

  WeightedGraph(Index n, std::vector<EdgeType> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ < 0) throw ValidationError("negative vertex count");
    std::vector<std::pair<Index, Index>> keys;
    keys.reserve(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      const std::string where = "edge " + std::to_string(e) + " (" + std::to_string(ed.i) + "," +
                                std::to_string(ed.j) + ")";
      if (ed.i < 0 || ed.i >= n_ || ed.j < 0 || ed.j >= n_)
        throw ValidationError(where + ": vertex id out of range [0," + std::to_string(n_) + ")");
      if (ed.i == ed.j) throw ValidationError(where + ": self-loop");
      if (!(ed.w > Scalar(0)) || !std::isfinite(static_cast<double>(ed.w)))
        throw ValidationError(where + ": weight must be positive and finite");
      keys.emplace_back(std::min(ed.i, ed.j), std::max(ed.i, ed.j));
    }
    std::sort(keys.begin(), keys.end());
    auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end())
      throw ValidationError("duplicate edge (" + std::to_string(dup->first) + "," +
                            std::to_string(dup->second) + ")");
  }

  Index size() const { return n_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  const std::vector<EdgeType>& edges() const { return edges_; }
  const EdgeType& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Edge ids incident to each vertex, in increasing edge-id order.
  std::vector<std::vector<Index>> incidence() const {
    std::vector<std::vector<Index>> inc(static_cast<std::size_t>(n_));
    for (Index e = 0; e < edge_count(); ++e) {
      inc[static_cast<std::size_t>(edge(e).i)].push_back(e);
      inc[static_cast<std::size_t>(edge(e).j)].push_back(e);
    }
    return inc;
  }

  Scalar total_weight() const {
    Scalar s(0);
    for (const auto& e : edges_) s += e.w;
    return s;
  }

 private:
  Index n_ = 0;
  std::vector<EdgeType> edges_;
};

/// Dense weighted graph Laplacian, assembled once per edge so that
/// symmetry is exact.
template <typename Scalar>
Matrix<Scalar> laplacian(const WeightedGraph<Scalar>& g) {
  Matrix<Scalar> a = Matrix<Scalar>::Zero(g.size(), g.size());
  for (const auto& e : g.edges()) {
    a(e.i, e.j) -= e.w;
    a(e.j, e.i) -= e.w;
    a(e.i, e.i) += e.w;
    a(e.j, e.j) += e.w;
  }
  return a;
}

template <typename Scalar>
Vector<Scalar> weighted_degrees(const WeightedGraph<Scalar>& g) {
  Vector<Scalar> deg = Vector<Scalar>::Zero(g.size());
  for (const auto& e : g.edges()) {
    deg(e.i) += e.w;
    deg(e.j) += e.w;
  }
  return deg;
}

template <typename Scalar>
DiagonalMatrix<Scalar> degree_matrix(const WeightedGraph<Scalar>& g) {
  return DiagonalMatrix<Scalar>(weighted_degrees(g));
}

template <typename Scalar>
bool is_connected(const WeightedGraph<Scalar>& g) {
  if (g.size() <= 1) return true;
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(g.size()));
  for (const auto& e : g.edges()) {
    adj[static_cast<std::size_t>(e.i)].push_back(e.j);
    adj[static_cast<std::size_t>(e.j)].push_back(e.i);
  }
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  Index reached = 1;
  while (!frontier.empty()) {
    Index v = frontier.front();
    frontier.pop();
    for (Index u : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++reached;
        frontier.push(u);
      }
    }
  }
  return reached == g.size();
}

/// <Mv, v> / <v, v>.
template <typename MatrixDerived, typename VectorDerived>
typename MatrixDerived::Scalar rayleigh_quotient(const Eigen::MatrixBase<MatrixDerived>& m,
                                                 const Eigen::MatrixBase<VectorDerived>& v) {
  using Scalar = typename MatrixDerived::Scalar;
  const Scalar vv = v.squaredNorm();
  if (!(vv > Scalar(0))) throw DomainError("rayleigh_quotient: zero vector");
  return v.dot(m * v) / vv;
}

/// Recovers the weighted graph whose Laplacian is `a`. Every strictly
/// negative off-diagonal entry in the upper triangle becomes an edge.
template <typename Derived>
WeightedGraph<typename Derived::Scalar> graph_from_laplacian(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw ValidationError("graph_from_laplacian: matrix not square");
  std::vector<Edge<Scalar>> edges;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != a(j, i)) throw ValidationError("graph_from_laplacian: matrix not symmetric");
      if (a(i, j) > Scalar(0)) throw ValidationError("graph_from_laplacian: positive off-diagonal");
      if (a(i, j) < Scalar(0)) edges.push_back({i, j, -a(i, j)});
    }
  }
  return WeightedGraph<Scalar>(a.rows(), std::move(edges));
}

}  // namespace disagg
