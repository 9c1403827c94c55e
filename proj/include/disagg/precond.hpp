#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disagg/disaggregate.hpp"
#include "disagg/error.hpp"
#include "disagg/graph.hpp"

namespace disagg {

/// x = (L + e_j e_j^T)^{-1} 1 for the Laplacian L of a connected local graph.
template <typename Derived>
Vector<typename Derived::Scalar> local_solve(const Eigen::MatrixBase<Derived>& lk, Index j) {
  using Scalar = typename Derived::Scalar;
  const Index d = lk.rows();
  if (lk.cols() != d) throw ValidationError("local_solve: matrix not square");
  if (j < 0 || j >= d) throw ValidationError("local_solve: local vertex out of range");
  Matrix<Scalar> shifted = lk;
  shifted(j, j) += Scalar(1);
  Eigen::FullPivLU<Matrix<Scalar>> lu(shifted);
  if (!lu.isInvertible()) throw DomainError("local_solve: singular system (disconnected local graph)");
  return lu.solve(Vector<Scalar>::Ones(d));
}

/// W = (1/d^2) ||(L + e_j e_j^T)^{-1} 1||_L^2.
template <typename Derived>
typename Derived::Scalar local_weight(const Eigen::MatrixBase<Derived>& lk, Index j) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> x = local_solve(lk, j);
  const Scalar d = Scalar(lk.rows());
  return x.dot(lk * x) / (d * d);
}

/// (1/d)<u,1> - u_j - (1/d)<x, L u> with x = (L + e_j e_j^T)^{-1} 1; zero up
/// to rounding for every u when the local graph is connected.
template <typename Derived, typename VectorDerived>
typename Derived::Scalar local_identity_defect(const Eigen::MatrixBase<Derived>& lk, Index j,
                                               const Eigen::MatrixBase<VectorDerived>& u) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> x = local_solve(lk, j);
  const Scalar d = Scalar(lk.rows());
  return u.sum() / d - u(j) - x.dot(lk * u) / d;
}

/// Edge classes of G_D: between untouched vertices, untouched-to-disaggregate,
/// between disaggregates of different groups, inside one group.
enum class EdgeClass { interior, boundary, cross, internal };

inline const char* to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::interior: return "interior";
    case EdgeClass::boundary: return "boundary";
    case EdgeClass::cross: return "cross";
    case EdgeClass::internal: return "internal";
  }
  return "?";
}

template <typename Scalar = double>
struct WeightLedger {
  Scalar eps{};
  std::vector<Vector<Scalar>> local_weights;  // per group k, entry j: W_k^j
  std::vector<Scalar> group_thresholds;      // per group: required internal weight
  std::vector<EdgeClass> edge_class;         // per G_D edge
  std::vector<Index> edge_group;             // per G_D edge: group for internal edges, else -1

  /// Required weight of edge e (zero unless e is internal).
  Scalar threshold(Index e) const {
    const Index k = edge_group[static_cast<std::size_t>(e)];
    return k < 0 ? Scalar(0) : group_thresholds[static_cast<std::size_t>(k)];
  }
};

template <typename Scalar>
std::vector<EdgeClass> classify_edges(const DisaggregatedSystem<Scalar>& sys) {
  std::vector<EdgeClass> out;
  out.reserve(sys.graph.edges().size());
  for (const auto& e : sys.graph.edges()) {
    const Index gi = sys.origin[static_cast<std::size_t>(e.i)].group;
    const Index gj = sys.origin[static_cast<std::size_t>(e.j)].group;
    if (gi < 0 && gj < 0)
      out.push_back(EdgeClass::interior);
    else if (gi < 0 || gj < 0)
      out.push_back(EdgeClass::boundary);
    else if (gi == gj)
      out.push_back(EdgeClass::internal);
    else
      out.push_back(EdgeClass::cross);
  }
  return out;
}

/// Internal-edge weights that make ||P~^T v||_A^2 <= (1 + eps) ||v||_{A~_D}^2.
/// For group k the requirement is
///   (1 + 1/eps) [ sum_{boundary e at j in k} w_e W_k^j
///                 + 2 sum_{cross e at j in k} w_e W_k^j ].
template <typename Scalar>
WeightLedger<Scalar> edge_thresholds(const DisaggregatedSystem<Scalar>& sys, Scalar eps) {
  if (!(eps > Scalar(0))) throw DomainError("edge_thresholds: eps must be positive");
  WeightLedger<Scalar> ledger;
  ledger.eps = eps;
  for (std::size_t k = 0; k < sys.groups.size(); ++k) {
    const auto& grp = sys.groups[k];
    const Matrix<Scalar> lk = template_laplacian(sys.plan.splits[k].local, grp.d);
    Vector<Scalar> w(grp.d);
    for (Index j = 0; j < grp.d; ++j) w(j) = local_weight(lk, j);
    ledger.local_weights.push_back(std::move(w));
  }
  ledger.edge_class = classify_edges(sys);
  ledger.edge_group.assign(ledger.edge_class.size(), -1);

  std::vector<Scalar> boundary(sys.groups.size(), Scalar(0));
  std::vector<Scalar> cross(sys.groups.size(), Scalar(0));
  for (Index e = 0; e < sys.graph.edge_count(); ++e) {
    const auto& ed = sys.graph.edge(e);
    const EdgeClass c = ledger.edge_class[static_cast<std::size_t>(e)];
    if (c == EdgeClass::internal) {
      ledger.edge_group[static_cast<std::size_t>(e)] = sys.origin[static_cast<std::size_t>(ed.i)].group;
      continue;
    }
    if (c == EdgeClass::interior) continue;
    for (Index x : {ed.i, ed.j}) {
      const auto& o = sys.origin[static_cast<std::size_t>(x)];
      if (o.group < 0) continue;
      const Scalar contrib = ed.w * ledger.local_weights[static_cast<std::size_t>(o.group)](o.local);
      (c == EdgeClass::boundary ? boundary : cross)[static_cast<std::size_t>(o.group)] += contrib;
    }
  }
  for (std::size_t k = 0; k < sys.groups.size(); ++k)
    ledger.group_thresholds.push_back((Scalar(1) + Scalar(1) / eps) * (boundary[k] + Scalar(2) * cross[k]));
  return ledger;
}

/// Raises every internal edge to at least its threshold; heavier edges keep
/// their weight.
template <typename Scalar>
DisaggregatedSystem<Scalar> apply_weight_rule(const DisaggregatedSystem<Scalar>& sys,
                                              const WeightLedger<Scalar>& ledger) {
  std::vector<std::vector<Scalar>> weights;
  for (std::size_t k = 0; k < sys.groups.size(); ++k) {
    std::vector<Scalar> wk;
    for (Index e : sys.groups[k].internal_edges)
      wk.push_back(std::max(sys.graph.edge(e).w, ledger.group_thresholds[k]));
    weights.push_back(std::move(wk));
  }
  return with_internal_weights(sys, weights);
}

namespace detail {

/// Orthonormal basis of the orthogonal complement of `u`.
template <typename Scalar>
Matrix<Scalar> complement_basis(const Vector<Scalar>& u) {
  const Index n = u.size();
  Eigen::HouseholderQR<Matrix<Scalar>> qr(u.normalized());
  const Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  return q.rightCols(n - 1);
}

}  // namespace detail

/// Smallest c1^2 with ||P~^T v||_A^2 <= c1^2 ||v||_{A~_D}^2 for all v: the
/// largest generalized eigenvalue of (P~ A P~^T, A~_D) once the common null
/// vector D_s 1 is deflated.
template <typename Scalar>
Scalar fictitious_upper_constant(const DisaggregatedSystem<Scalar>& sys) {
  if (!is_connected(sys.graph)) throw DomainError("fictitious_upper_constant: G_D is disconnected");
  const Matrix<Scalar> pt = scaled_prolongation(sys);
  const Matrix<Scalar> a = laplacian(sys.source);
  const Matrix<Scalar> q = detail::complement_basis<Scalar>(sys.scaling);
  Matrix<Scalar> lhs = q.transpose() * pt * a * pt.transpose() * q;
  Matrix<Scalar> rhs = q.transpose() * sys.scaled_laplacian() * q;
  lhs = (lhs + lhs.transpose()).eval() / Scalar(2);
  rhs = (rhs + rhs.transpose()).eval() / Scalar(2);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<Scalar>> solver(lhs, rhs, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("fictitious_upper_constant: solver failed");
  return solver.eigenvalues().maxCoeff();
}

/// Moore-Penrose pseudoinverse of a connected graph Laplacian:
/// (A + J/N)^{-1} - J/N, J the all-ones matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> laplacian_pseudoinverse(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Index n = a.rows();
  const Matrix<Scalar> j = Matrix<Scalar>::Constant(n, n, Scalar(1) / Scalar(n));
  Eigen::LLT<Matrix<Scalar>> llt(a + j);
  if (llt.info() != Eigen::Success) throw DomainError("laplacian_pseudoinverse: graph is disconnected");
  return llt.solve(Matrix<Scalar>::Identity(n, n)) - j;
}

enum class InnerKind { exact_pseudoinverse, jacobi, sym_gauss_seidel };

inline const char* to_string(InnerKind k) {
  switch (k) {
    case InnerKind::exact_pseudoinverse: return "pinv";
    case InnerKind::jacobi: return "jacobi";
    case InnerKind::sym_gauss_seidel: return "sgs";
  }
  return "?";
}

/// B_D for A_D: pseudoinverse, inverse diagonal, or the symmetric
/// Gauss-Seidel operator (D + L^T)^{-1} D (D + L)^{-1}.
template <typename Derived>
Matrix<typename Derived::Scalar> inner_preconditioner(const Eigen::MatrixBase<Derived>& ad, InnerKind kind) {
  using Scalar = typename Derived::Scalar;
  const Index n = ad.rows();
  switch (kind) {
    case InnerKind::exact_pseudoinverse:
      return laplacian_pseudoinverse(ad);
    case InnerKind::jacobi:
      return ad.diagonal().cwiseInverse().asDiagonal();
    case InnerKind::sym_gauss_seidel: {
      const Matrix<Scalar> lower = ad.template triangularView<Eigen::Lower>();
      const Matrix<Scalar> lower_inv =
          lower.template triangularView<Eigen::Lower>().solve(Matrix<Scalar>::Identity(n, n));
      Matrix<Scalar> b = lower_inv.transpose() * ad.diagonal().asDiagonal() * lower_inv;
      return (b + b.transpose()) / Scalar(2);
    }
  }
  throw ValidationError("inner_preconditioner: unsupported kind");
}

/// B = P~^T (D_s B_D D_s) P~, assembled densely.
template <typename Scalar = double>
struct Preconditioner {
  InnerKind kind = InnerKind::exact_pseudoinverse;
  Matrix<Scalar> inner;         // B_D
  Matrix<Scalar> scaled_inner;  // D_s B_D D_s
  Matrix<Scalar> matrix;        // B

  Vector<Scalar> operator()(const Vector<Scalar>& r) const { return matrix * r; }
};

template <typename Scalar>
Preconditioner<Scalar> build_preconditioner(const DisaggregatedSystem<Scalar>& sys, InnerKind kind) {
  Preconditioner<Scalar> b;
  b.kind = kind;
  b.inner = inner_preconditioner(sys.laplacian, kind);
  b.scaled_inner = sys.scaling.asDiagonal() * b.inner * sys.scaling.asDiagonal();
  const Matrix<Scalar> pt = scaled_prolongation(sys);
  b.matrix = pt.transpose() * b.scaled_inner * pt;
  b.matrix = (b.matrix + b.matrix.transpose()).eval() / Scalar(2);
  return b;
}

/// Effective condition number of BA: the ratio of its extreme eigenvalues
/// on the range of A. Computed as the spectrum of
/// Lambda^{1/2} V^T B V Lambda^{1/2} over the nonzero eigenpairs of A.
template <typename DerivedB, typename DerivedA>
typename DerivedA::Scalar condition_estimate(const Eigen::MatrixBase<DerivedB>& b,
                                             const Eigen::MatrixBase<DerivedA>& a) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols())
    throw ValidationError("condition_estimate: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> ea(a.eval());
  const Vector<Scalar>& lam = ea.eigenvalues();
  const Scalar cut = Scalar(1e-10) * std::max(Scalar(1e-300), lam.cwiseAbs().maxCoeff());
  std::vector<Index> keep;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -cut) throw DomainError("condition_estimate: A is not positive semidefinite");
    if (lam(i) > cut) keep.push_back(i);
  }
  if (keep.empty()) throw DomainError("condition_estimate: A is zero");
  Matrix<Scalar> vr(a.rows(), static_cast<Index>(keep.size()));
  Vector<Scalar> sq(static_cast<Index>(keep.size()));
  for (std::size_t t = 0; t < keep.size(); ++t) {
    vr.col(static_cast<Index>(t)) = ea.eigenvectors().col(keep[t]);
    using std::sqrt;
    sq(static_cast<Index>(t)) = sqrt(lam(keep[t]));
  }
  Matrix<Scalar> s = sq.asDiagonal() * (vr.transpose() * b * vr) * sq.asDiagonal();
  s = (s + s.transpose()).eval() / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(s, Eigen::EigenvaluesOnly);
  const Scalar hi = es.eigenvalues().maxCoeff();
  const Scalar lo = es.eigenvalues().minCoeff();
  if (!(lo > Scalar(1e-12) * hi)) throw DomainError("condition_estimate: null space of B meets range of A");
  return hi / lo;
}

template <typename Scalar = double>
struct SolveReport {
  Index iterations = 0;
  bool converged = false;
  std::vector<Scalar> residuals;  // ||b - A x_k|| / ||b||, k = 0..iterations
  std::vector<Scalar> energies;   // 1/2 x^T A x - b^T x, nonincreasing in exact arithmetic
  std::optional<Scalar> kappa;        // kappa(BA)
  std::optional<Scalar> kappa_inner;  // kappa(B_D A_D)
  std::optional<Scalar> c1_squared;
};

template <typename Scalar = double>
struct SolveResult {
  Vector<Scalar> x;
  SolveReport<Scalar> report;
};

/// Preconditioned CG for a connected graph Laplacian. The right-hand side
/// must be orthogonal to 1; every preconditioned residual and the final
/// iterate are projected onto the complement of 1.
template <typename Scalar, typename Precond>
SolveResult<Scalar> pcg_solve(const Matrix<Scalar>& a, const Vector<Scalar>& b, const Precond& precond,
                              Scalar tol, Index maxit) {
  if (!(tol > Scalar(0))) throw DomainError("pcg_solve: tol must be positive");
  if (a.rows() != a.cols() || b.size() != a.rows()) throw ValidationError("pcg_solve: dimension mismatch");
  const Index n = b.size();
  using std::abs;
  using std::sqrt;
  const Scalar bnorm = b.norm();
  SolveResult<Scalar> out;
  out.x = Vector<Scalar>::Zero(n);
  if (bnorm == Scalar(0)) {
    out.report.converged = true;
    out.report.residuals.push_back(Scalar(0));
    out.report.energies.push_back(Scalar(0));
    return out;
  }
  if (abs(b.sum()) / bnorm > Scalar(1e-10)) throw DomainError("pcg_solve: right-hand side not orthogonal to 1");

  auto project = [n](Vector<Scalar> v) {
    v.array() -= v.sum() / Scalar(n);
    return v;
  };
  Vector<Scalar> x = Vector<Scalar>::Zero(n);
  Vector<Scalar> r = b;
  Vector<Scalar> z = project(precond(r));
  Vector<Scalar> p = z;
  Scalar rz = r.dot(z);
  out.report.residuals.push_back(Scalar(1));
  out.report.energies.push_back(Scalar(0));
  for (Index k = 1; k <= maxit; ++k) {
    const Vector<Scalar> ap = a * p;
    const Scalar pap = p.dot(ap);
    if (!(pap > Scalar(0))) break;
    const Scalar alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    out.report.iterations = k;
    out.report.residuals.push_back(r.norm() / bnorm);
    out.report.energies.push_back(-x.dot(b + r) / Scalar(2));
    if (r.norm() <= tol * bnorm) {
      out.report.converged = true;
      break;
    }
    z = project(precond(r));
    const Scalar rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  out.x = project(x);
  return out;
}

template <typename Scalar>
SolveResult<Scalar> pcg_solve(const Matrix<Scalar>& a, const Vector<Scalar>& b, const Matrix<Scalar>& precond,
                              Scalar tol, Index maxit) {
  return pcg_solve(a, b, [&precond](const Vector<Scalar>& r) -> Vector<Scalar> { return precond * r; }, tol,
                   maxit);
}

}  // namespace disagg
