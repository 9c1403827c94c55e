#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "disagg/disagg.hpp"

/// Reference computations that avoid the library code paths under test.
namespace oracle {

using disagg::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// sum_e w_e (v_i - v_j)^2.
inline double edge_energy(const disagg::WeightedGraph<double>& g, const Vec& v) {
  double s = 0.0;
  for (const auto& e : g.edges()) s += e.w * (v(e.i) - v(e.j)) * (v(e.i) - v(e.j));
  return s;
}

/// Laplacian through the adjacency matrix: D - W.
inline Mat laplacian_from_adjacency(const disagg::WeightedGraph<double>& g) {
  Mat w = Mat::Zero(g.size(), g.size());
  for (const auto& e : g.edges()) {
    w(e.i, e.j) = e.w;
    w(e.j, e.i) = e.w;
  }
  Mat l = -w;
  l.diagonal() = w.rowwise().sum();
  return l;
}

/// Largest generalized eigenvalue of (M, K) for symmetric PSD M, K sharing
/// the null vector `z`: lambda_max(K^{+1/2} M K^{+1/2}).
inline double max_generalized_eigenvalue(const Mat& m, const Mat& k) {
  Eigen::SelfAdjointEigenSolver<Mat> ek(k);
  const double cut = 1e-10 * ek.eigenvalues().cwiseAbs().maxCoeff();
  Vec inv_sqrt = Vec::Zero(k.rows());
  for (Index i = 0; i < k.rows(); ++i)
    if (ek.eigenvalues()(i) > cut) inv_sqrt(i) = 1.0 / std::sqrt(ek.eigenvalues()(i));
  const Mat root = ek.eigenvectors() * inv_sqrt.asDiagonal() * ek.eigenvectors().transpose();
  Mat s = root * m * root;
  s = 0.5 * (s + s.transpose());
  return Eigen::SelfAdjointEigenSolver<Mat>(s, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

/// Exact Cheeger constant by recursive enumeration of every vertex subset.
inline double cheeger(const disagg::WeightedGraph<double>& g) {
  const Index n = g.size();
  Vec deg = Vec::Zero(n);
  for (const auto& e : g.edges()) {
    deg(e.i) += e.w;
    deg(e.j) += e.w;
  }
  const double total = deg.sum();
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  double best = INFINITY;
  std::function<void(Index)> rec = [&](Index v) {
    if (v == n) {
      double vol = 0.0;
      double cut = 0.0;
      Index count = 0;
      for (Index i = 0; i < n; ++i)
        if (in[static_cast<std::size_t>(i)]) {
          vol += deg(i);
          ++count;
        }
      if (count == 0 || count == n) return;
      for (const auto& e : g.edges())
        if (in[static_cast<std::size_t>(e.i)] != in[static_cast<std::size_t>(e.j)]) cut += e.w;
      const double small = std::min(vol, total - vol);
      if (small > 0.0) best = std::min(best, cut / small);
      return;
    }
    in[static_cast<std::size_t>(v)] = 0;
    rec(v + 1);
    in[static_cast<std::size_t>(v)] = 1;
    rec(v + 1);
  };
  rec(0);
  return best;
}

/// Moore-Penrose pseudoinverse through the eigendecomposition.
inline Mat pinv_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const double cut = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
  Vec inv = Vec::Zero(a.rows());
  for (Index i = 0; i < a.rows(); ++i)
    if (std::abs(es.eigenvalues()(i)) > cut) inv(i) = 1.0 / es.eigenvalues()(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Eigenvalues of B A restricted to range(A) via the general (nonsymmetric)
/// eigensolver, dropping the near-zero ones.
inline std::vector<double> range_spectrum(const Mat& b, const Mat& a) {
  Eigen::EigenSolver<Mat> es(b * a, false);
  std::vector<double> out;
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  for (Index i = 0; i < a.rows(); ++i)
    if (std::abs(es.eigenvalues()(i)) > 1e-8 * scale) out.push_back(es.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

/// Off-diagonals must agree exactly; diagonals are sums whose order may differ, so allow a few ulps.
inline bool same_laplacian(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j && a(i, j) != b(i, j)) return false;
      if (i == j && std::abs(a(i, i) - b(i, i)) > 8 * std::numeric_limits<double>::epsilon() * scale) return false;
    }
  return true;
}

}  // namespace oracle
