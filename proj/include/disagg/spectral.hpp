#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "disagg/disaggregate.hpp"
#include "disagg/error.hpp"
#include "disagg/graph.hpp"

namespace disagg {

/// Sorted spectrum of a symmetric matrix. Eigenvectors are orthonormal
/// columns, each signed so its largest-magnitude entry is positive.
template <typename Scalar = double>
struct SpectralSummary {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  bool fiedler_degenerate = false;  // lambda_2 has multiplicity > 1

  Index size() const { return eigenvalues.size(); }
  Scalar algebraic_connectivity() const { return eigenvalues(1); }
  Vector<Scalar> fiedler() const { return eigenvectors.col(1); }
  Scalar max_eigenvalue() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// Spectrum of D^{-1} A. Eigenvectors are D-orthonormal: <D phi, phi> = 1.
template <typename Scalar = double>
struct NormalizedSummary {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  bool fiedler_degenerate = false;

  Scalar nu2() const { return eigenvalues(1); }
  Vector<Scalar> fiedler() const { return eigenvectors.col(1); }
};

namespace detail {

template <typename Scalar>
void canonical_signs(Matrix<Scalar>& vecs) {
  for (Index c = 0; c < vecs.cols(); ++c) {
    Index arg = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, c) < Scalar(0)) vecs.col(c) = -vecs.col(c);
  }
}

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m, const char* who) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw ValidationError(std::string(who) + ": matrix not square");
  const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw ValidationError(std::string(who) + ": matrix not symmetric");
}

template <typename Scalar>
bool second_eigenvalue_repeated(const Vector<Scalar>& ev) {
  if (ev.size() < 3) return false;
  using std::abs;
  const Scalar scale = std::max(abs(ev(ev.size() - 1)), Scalar(1e-300));
  return ev(2) - ev(1) <= Scalar(1e-9) * scale;
}

}  // namespace detail

template <typename Derived>
SpectralSummary<typename Derived::Scalar> eigs(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  detail::require_symmetric(m, "eigs");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(m.eval());
  if (solver.info() != Eigen::Success) throw ConvergenceError("eigs: eigensolver failed");
  SpectralSummary<Scalar> out;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  detail::canonical_signs(out.eigenvectors);
  out.fiedler_degenerate = detail::second_eigenvalue_repeated(out.eigenvalues);
  return out;
}

/// Spectrum of D^{-1} A with D = diag(A), computed through the symmetric
/// D^{-1/2} A D^{-1/2}.
template <typename Derived>
NormalizedSummary<typename Derived::Scalar> normalized_eigs(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::require_symmetric(a, "normalized_eigs");
  const Vector<Scalar> deg = a.diagonal();
  if (!(deg.minCoeff() > Scalar(0))) throw DomainError("normalized_eigs: isolated vertex (zero degree)");
  const Vector<Scalar> isq = deg.cwiseSqrt().cwiseInverse();
  const Matrix<Scalar> sym = isq.asDiagonal() * a * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success) throw ConvergenceError("normalized_eigs: eigensolver failed");
  NormalizedSummary<Scalar> out;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = isq.asDiagonal() * solver.eigenvectors();
  detail::canonical_signs(out.eigenvectors);
  out.fiedler_degenerate = detail::second_eigenvalue_repeated(out.eigenvalues);
  return out;
}

/// Closed-form Rayleigh quotient of a lifted unit eigenvector after one
/// vertex is split into d: lambda / (1 + ((d-1) n / N) phi_n^2), N = n-1+d.
template <typename Scalar>
Scalar rq_shrink_single(Scalar lambda, Scalar phi_n, Index d, Index n) {
  if (d < 1) throw DomainError("rq_shrink_single: d must be at least 1");
  const Scalar big_n = Scalar(n - 1 + d);
  return lambda / (Scalar(1) + Scalar((d - 1) * n) / big_n * phi_n * phi_n);
}

template <typename Scalar = double>
struct ConnectivityBound {
  Scalar a_g{};
  Scalar a_gd{};
  Scalar ratio{};  // a(G) / a(G_D)
  Scalar bound{};
  bool holds = false;             // ratio >= bound - 1e-9
  bool monotone = false;          // a(G_D) <= a(G) + 1e-9
  bool fiedler_degenerate = false;
  bool fiedler_vanishes = false;  // every split-vertex Fiedler entry is ~0
  bool positivity = true;         // n + n_d - m d_max > 0 (multi-split form)
};

inline constexpr double kBoundSlack = 1e-9;
inline constexpr double kZeroEntry = 1e-8;

namespace detail {

template <typename Scalar>
Scalar connected_a(const SpectralSummary<Scalar>& s, const char* who) {
  using std::abs;
  if (s.size() < 2) throw DomainError(std::string(who) + ": graph needs at least two vertices");
  if (!(s.algebraic_connectivity() > Scalar(1e-10) * std::max(Scalar(1), abs(s.max_eigenvalue()))))
    throw DomainError(std::string(who) + ": graph is disconnected");
  return s.algebraic_connectivity();
}

template <typename Scalar>
void finish(ConnectivityBound<Scalar>& r) {
  r.ratio = r.a_g / r.a_gd;
  r.holds = r.ratio >= r.bound - Scalar(kBoundSlack);
  r.monotone = r.a_gd <= r.a_g + Scalar(kBoundSlack);
}

template <typename Scalar>
void require_single(const DisaggregatedSystem<Scalar>& sys, const char* who) {
  if (sys.split_count() != 1) throw ValidationError(std::string(who) + ": exactly one split required");
}

}  // namespace detail

/// a(G)/a(G_D) against 1 + ((d-1) n / N) phi_n^2 for a single split, where
/// phi_n is the source Fiedler vector at the split vertex.
template <typename Scalar>
ConnectivityBound<Scalar> connectivity_ratio_bound_single(const DisaggregatedSystem<Scalar>& sys,
                                                          const SpectralSummary<Scalar>& source) {
  detail::require_single(sys, "connectivity_ratio_bound_single");
  ConnectivityBound<Scalar> r;
  r.a_g = detail::connected_a(source, "connectivity_ratio_bound_single");
  r.a_gd = detail::connected_a(eigs(sys.laplacian), "connectivity_ratio_bound_single (G_D)");
  const auto& grp = sys.groups.front();
  const Scalar phi = source.fiedler()(grp.vertex);
  using std::abs;
  r.fiedler_vanishes = abs(phi) <= Scalar(kZeroEntry);
  r.fiedler_degenerate = source.fiedler_degenerate;
  r.bound = Scalar(1) + Scalar((grp.d - 1) * sys.original_size()) / Scalar(sys.size()) * phi * phi;
  detail::finish(r);
  return r;
}

/// Value of 1 + (1/N) sum_i (d_i - 1)(n + n_d - m d_i) phi_i^2.
template <typename Scalar>
Scalar multi_split_bound(const DisaggregatedSystem<Scalar>& sys, const Vector<Scalar>& fiedler) {
  const Index n = sys.original_size();
  const Index m = sys.split_count();
  const Index nd = sys.disaggregated_count();
  Scalar acc(0);
  for (const auto& grp : sys.groups) {
    const Scalar phi = fiedler(grp.vertex);
    acc += Scalar((grp.d - 1) * (n + nd - m * grp.d)) * phi * phi;
  }
  return Scalar(1) + acc / Scalar(sys.size());
}

template <typename Scalar>
ConnectivityBound<Scalar> connectivity_ratio_bound_multi(const DisaggregatedSystem<Scalar>& sys,
                                                         const SpectralSummary<Scalar>& source) {
  ConnectivityBound<Scalar> r;
  r.a_g = detail::connected_a(source, "connectivity_ratio_bound_multi");
  r.a_gd = detail::connected_a(eigs(sys.laplacian), "connectivity_ratio_bound_multi (G_D)");
  r.fiedler_degenerate = source.fiedler_degenerate;
  const Vector<Scalar> phi = source.fiedler();
  r.bound = multi_split_bound(sys, phi);
  Index dmax = 0;
  r.fiedler_vanishes = true;
  using std::abs;
  for (const auto& grp : sys.groups) {
    dmax = std::max(dmax, grp.d);
    if (abs(phi(grp.vertex)) > Scalar(kZeroEntry)) r.fiedler_vanishes = false;
  }
  r.positivity = sys.original_size() + sys.disaggregated_count() - sys.split_count() * dmax > 0;
  detail::finish(r);
  return r;
}

/// Product of single-split factors along the one-at-a-time chain. Each
/// factor reads the Fiedler vector of the intermediate graph before that
/// split.
template <typename Scalar>
ConnectivityBound<Scalar> connectivity_ratio_bound_product(const WeightedGraph<Scalar>& g,
                                                           const DisaggregationPlan<Scalar>& plan) {
  ConnectivityBound<Scalar> r;
  const auto source = eigs(laplacian(g));
  r.a_g = detail::connected_a(source, "connectivity_ratio_bound_product");
  r.bound = Scalar(1);
  r.fiedler_vanishes = true;
  r.fiedler_degenerate = false;
  const auto chain = disaggregate_sequentially(g, plan);
  SpectralSummary<Scalar> prev = source;
  Index prev_n = g.size();
  using std::abs;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const auto& step = chain.steps[i];
    const Scalar phi = prev.fiedler()(chain.split_vertex[i]);
    if (abs(phi) > Scalar(kZeroEntry)) r.fiedler_vanishes = false;
    r.fiedler_degenerate = r.fiedler_degenerate || prev.fiedler_degenerate;
    const Index d = step.groups.front().d;
    r.bound *= Scalar(1) + Scalar((d - 1) * prev_n) / Scalar(step.size()) * phi * phi;
    prev = eigs(step.laplacian);
    detail::connected_a(prev, "connectivity_ratio_bound_product (intermediate)");
    prev_n = step.size();
  }
  r.a_gd = prev.algebraic_connectivity();
  detail::finish(r);
  return r;
}

template <typename Scalar = double>
struct ResidualBound {
  Scalar lhs{};
  Scalar rhs{};
  bool holds = false;
};

/// ||A_D phi~ - RQ(phi~) phi~|| against the a-priori residual estimate for a
/// single split. The right side is evaluated in the multiplied-out form
/// ||A_0n^T (phi_n 1 - phi_0)|| + ..., which stays finite at phi_n = 0.
template <typename Scalar, typename Derived>
ResidualBound<Scalar> residual_bound_single(const DisaggregatedSystem<Scalar>& sys, Scalar lambda,
                                            const Eigen::MatrixBase<Derived>& phi) {
  detail::require_single(sys, "residual_bound_single");
  const Vector<Scalar> lifted = lift_eigvec(sys, phi);
  const Scalar rq = rayleigh_quotient(sys.laplacian, lifted);
  ResidualBound<Scalar> r;
  r.lhs = (sys.laplacian * lifted - rq * lifted).norm();

  const auto& grp = sys.groups.front();
  const Scalar phi_n = phi(grp.vertex);
  const Index nd = sys.disaggregated_count();
  Vector<Scalar> phi0(sys.size() - nd);
  for (Index t = 0; t < phi0.size(); ++t) phi0(t) = phi(sys.origin[static_cast<std::size_t>(nd + t)].vertex);
  const Scalar coupling_term =
      (sys.coupling_block().transpose() * (Vector<Scalar>::Constant(phi0.size(), phi_n) - phi0)).norm();

  using std::abs;
  using std::sqrt;
  const Scalar d = Scalar(grp.d);
  const Scalar n = Scalar(sys.original_size());
  const Scalar big_n = Scalar(sys.size());
  r.rhs = coupling_term + sqrt(d * n * (d + n)) / big_n * abs(lambda) * abs(phi_n) +
          d * n / big_n * abs(lambda) * phi_n * phi_n;
  r.holds = r.lhs <= r.rhs + Scalar(kBoundSlack);
  return r;
}

template <typename Scalar = double>
struct NormalizedQuotient {
  Scalar value{};        // <A_D phi~, phi~> / <D_D phi~, phi~>
  Scalar closed_form{};  // nu / (1 + 2 w(G) w(G_a) / w(G_D) phi_n^2)
};

/// `phi` must satisfy <D phi, phi> = 1 for the closed form to apply.
template <typename Scalar, typename Derived>
NormalizedQuotient<Scalar> normalized_rq(const DisaggregatedSystem<Scalar>& sys, Scalar nu,
                                         const Eigen::MatrixBase<Derived>& phi) {
  detail::require_single(sys, "normalized_rq");
  const Vector<Scalar> lifted = lift_eigvec_normalized(sys, phi);
  const Vector<Scalar> deg = sys.laplacian.diagonal();
  NormalizedQuotient<Scalar> r;
  r.value = lifted.dot(sys.laplacian * lifted) / lifted.dot(deg.asDiagonal() * lifted);
  const Scalar w_local = sys.internal_weight(0);
  const Scalar w_gd = sys.graph.total_weight();
  const Scalar w_g = w_gd - w_local;
  const Scalar phi_n = phi(sys.groups.front().vertex);
  r.closed_form = nu / (Scalar(1) + Scalar(2) * w_g * w_local / w_gd * phi_n * phi_n);
  return r;
}

/// Shrink factor alpha <= 1 with nu_2(G_D) <= alpha nu_2(G): the product of
/// the single-split normalized factors along the one-at-a-time chain, each
/// using the D-normalized Fiedler vector of the intermediate graph.
template <typename Scalar>
Scalar normalized_shrink_factor(const WeightedGraph<Scalar>& g, const DisaggregationPlan<Scalar>& plan) {
  const auto chain = disaggregate_sequentially(g, plan);
  Scalar product(1);
  WeightedGraph<Scalar> prev = g;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const auto& step = chain.steps[i];
    const auto ns = normalized_eigs(laplacian(prev));
    const Scalar phi = ns.fiedler()(chain.split_vertex[i]);
    const Scalar w_local = step.internal_weight(0);
    product *= Scalar(1) + Scalar(2) * prev.total_weight() * w_local / step.graph.total_weight() * phi * phi;
    prev = step.graph;
  }
  return Scalar(1) / product;
}

/// Exact Cheeger constant by enumerating all 2^{n-1} bipartitions.
template <typename Scalar>
Scalar cheeger_exact(const WeightedGraph<Scalar>& g) {
  const Index n = g.size();
  if (n > 16) throw SizeError("cheeger_exact: n = " + std::to_string(n) + " exceeds 16; use eigenvalue bounds");
  if (n < 2) throw DomainError("cheeger_exact: need at least two vertices");
  const Vector<Scalar> deg = weighted_degrees(g);
  const Scalar total = deg.sum();
  Scalar best = std::numeric_limits<Scalar>::infinity();
  // Vertex n-1 always sits outside U; masks range over the other vertices.
  const std::uint32_t count = std::uint32_t(1) << (n - 1);
  for (std::uint32_t mask = 1; mask < count; ++mask) {
    Scalar vol(0);
    for (Index v = 0; v + 1 < n; ++v)
      if (mask & (std::uint32_t(1) << v)) vol += deg(v);
    const Scalar small = std::min(vol, total - vol);
    if (!(small > Scalar(0))) continue;
    Scalar cut(0);
    for (const auto& e : g.edges()) {
      const bool in_i = e.i + 1 < n && (mask & (std::uint32_t(1) << e.i));
      const bool in_j = e.j + 1 < n && (mask & (std::uint32_t(1) << e.j));
      if (in_i != in_j) cut += e.w;
    }
    best = std::min(best, cut / small);
  }
  return std::isinf(static_cast<double>(best)) ? Scalar(0) : best;
}

template <typename Scalar = double>
struct CheegerInequality {
  Scalar h{};
  Scalar nu2{};
  Scalar lower{};  // 1 - sqrt(1 - h^2)
  Scalar upper{};  // 2 h
  bool holds = false;
};

template <typename Scalar>
CheegerInequality<Scalar> cheeger_inequality(const WeightedGraph<Scalar>& g, Scalar slack = Scalar(1e-12)) {
  CheegerInequality<Scalar> r;
  r.h = cheeger_exact(g);
  r.nu2 = normalized_eigs(laplacian(g)).nu2();
  using std::sqrt;
  r.lower = Scalar(1) - sqrt(std::max(Scalar(0), Scalar(1) - r.h * r.h));
  r.upper = Scalar(2) * r.h;
  r.holds = r.lower <= r.nu2 + slack && r.nu2 <= r.upper + slack;
  return r;
}

template <typename Scalar = double>
struct CheegerReport {
  Scalar alpha{};
  Scalar h_g{};
  std::optional<Scalar> h_gd;  // exact, when G_D is small enough
  Scalar bound{};              // sqrt(1 - (1 - min(2 alpha h, 1))^2)
  bool holds = false;
  bool monotone_precondition = false;  // h(G) >= 4 alpha / (4 alpha^2 + 1)
  bool monotone_certified = false;     // precondition and 2 alpha h(G) <= 1
  bool monotone_holds = true;          // h(G_D) <= h(G) whenever certified and h(G_D) known
};

/// h(G_D) <= sqrt(1 - (1 - 2 alpha h(G))^2). Once 2 alpha h(G) reaches 1 the
/// estimate degenerates to the trivial h(G_D) <= 1.
template <typename Scalar>
Scalar cheeger_disagg_value(Scalar alpha, Scalar h) {
  using std::sqrt;
  const Scalar x = std::clamp(Scalar(2) * alpha * h, Scalar(0), Scalar(1));
  return sqrt(Scalar(1) - (Scalar(1) - x) * (Scalar(1) - x));
}

template <typename Scalar>
CheegerReport<Scalar> cheeger_disagg_bound(const DisaggregatedSystem<Scalar>& sys, Scalar slack = Scalar(1e-12)) {
  CheegerReport<Scalar> r;
  r.alpha = normalized_shrink_factor(sys.source, sys.plan);
  r.h_g = cheeger_exact(sys.source);
  r.bound = cheeger_disagg_value(r.alpha, r.h_g);
  r.monotone_precondition = r.h_g >= Scalar(4) * r.alpha / (Scalar(4) * r.alpha * r.alpha + Scalar(1));
  r.monotone_certified = r.monotone_precondition && Scalar(2) * r.alpha * r.h_g <= Scalar(1);
  r.holds = true;
  if (sys.size() <= 16) {
    r.h_gd = cheeger_exact(sys.graph);
    r.holds = *r.h_gd <= r.bound + slack;
    if (r.monotone_certified) r.monotone_holds = *r.h_gd <= r.h_g + slack;
  }
  return r;
}

template <typename Scalar = double>
struct InterlacingReport {
  bool holds = false;
  Scalar min_slack{};  // smallest margin over all 2n inequalities
};

/// lambda_i(A~_D) <= lambda_i(A) <= lambda_{N-n+i}(A~_D), both spectra sorted.
template <typename Scalar>
InterlacingReport<Scalar> interlacing_check(const Vector<Scalar>& coarse, const Vector<Scalar>& fine) {
  const Index n = coarse.size();
  const Index big_n = fine.size();
  if (n == 0 || big_n < n) throw ValidationError("interlacing_check: dimension mismatch");
  using std::abs;
  const Scalar scale = std::max({abs(coarse(n - 1)), abs(fine(big_n - 1)), Scalar(1e-300)});
  InterlacingReport<Scalar> r;
  r.min_slack = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    r.min_slack = std::min(r.min_slack, coarse(i) - fine(i));
    r.min_slack = std::min(r.min_slack, fine(big_n - n + i) - coarse(i));
  }
  r.holds = r.min_slack >= -Scalar(kBoundSlack) * scale;
  return r;
}

template <typename Scalar>
InterlacingReport<Scalar> interlacing_check(const SpectralSummary<Scalar>& a,
                                            const SpectralSummary<Scalar>& scaled_ad) {
  return interlacing_check(a.eigenvalues, scaled_ad.eigenvalues);
}

template <typename Scalar = double>
struct ProbeRow {
  Scalar w{};
  Scalar a_gd{};
  Scalar bound{};  // a(G) divided by the weight-independent ratio bound
  Scalar a_g{};
  bool holds = false;
};

template <typename Scalar = double>
struct ProbeTable {
  std::vector<ProbeRow<Scalar>> rows;
  Scalar a_g{};
  Scalar ratio_bound{};
  bool inconclusive = false;  // Fiedler entries vanish at every split vertex
};

/// Sets every internal edge to each weight of the sweep in turn and records
/// a(G_D) against a(G) / ratio_bound, which does not depend on the weight.
template <typename Scalar>
ProbeTable<Scalar> conjecture_probe(const WeightedGraph<Scalar>& g, const DisaggregationPlan<Scalar>& plan,
                                    const std::vector<Scalar>& sweep) {
  ProbeTable<Scalar> t;
  const auto base = apply(g, plan);
  const auto source = eigs(laplacian(g));
  t.a_g = detail::connected_a(source, "conjecture_probe");
  const Vector<Scalar> phi = source.fiedler();
  t.ratio_bound = multi_split_bound(base, phi);
  t.inconclusive = true;
  using std::abs;
  for (const auto& grp : base.groups)
    if (abs(phi(grp.vertex)) > Scalar(kZeroEntry)) t.inconclusive = false;
  for (Scalar w : sweep) {
    if (!(w > Scalar(0))) throw DomainError("conjecture_probe: sweep weights must be positive");
    const auto sys = with_uniform_internal_weight(base, w);
    ProbeRow<Scalar> row;
    row.w = w;
    row.a_g = t.a_g;
    row.a_gd = eigs(sys.laplacian).algebraic_connectivity();
    // A nonpositive multi-split bound carries no information beyond a(G_D) <= a(G).
    row.bound = t.a_g / std::max(t.ratio_bound, Scalar(1));
    row.holds = row.a_gd <= row.bound + Scalar(kBoundSlack);
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace disagg
