#include <cmath>
#include <stdexcept>

#include "disagg/disagg.hpp"
#include "disagg/io.hpp"

namespace disagg::io {

namespace {

CheckBlock le(std::string name, std::string anchor, double lhs, double rhs, double tol, std::string note = {}) {
  CheckBlock c{std::move(name), std::move(anchor), lhs, "<=", rhs, lhs <= rhs + tol, tol, std::move(note)};
  return c;
}

CheckBlock ge(std::string name, std::string anchor, double lhs, double rhs, double tol, std::string note = {}) {
  CheckBlock c{std::move(name), std::move(anchor), lhs, ">=", rhs, lhs >= rhs - tol, tol, std::move(note)};
  return c;
}

double relative_gap(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

void galerkin_checks(const DisaggregatedSystem<double>& sys, std::vector<CheckBlock>& out) {
  const Matrix<double> a = laplacian(sys.source);
  const Matrix<double>& p = sys.prolongation;
  const double diag = a.diagonal().cwiseAbs().maxCoeff();
  const double defect = (a - p.transpose() * sys.laplacian * p).cwiseAbs().maxCoeff();
  out.push_back(le("Galerkin identity max|A - P^T A_D P|", "galerkin-identity", defect, 1e-12 * diag, 0.0));

  const Matrix<double> pt = scaled_prolongation(sys);
  const Index n = sys.original_size();
  const double orth = (pt.transpose() * pt - Matrix<double>::Identity(n, n)).cwiseAbs().maxCoeff();
  out.push_back(le("scaled prolongation max|P~^T P~ - I|", "scaled-prolongation-orthonormal", orth, 0.0, 1e-14));
}

void connectivity_checks(const WeightedGraph<double>& g, const DisaggregatedSystem<double>& sys,
                         const SpectralSummary<double>& source, std::vector<CheckBlock>& out) {
  const auto multi = connectivity_ratio_bound_multi(sys, source);
  std::string note;
  if (!multi.positivity) note = "n + n_d - m d_max <= 0: bound not asserted";
  if (multi.fiedler_degenerate) note += std::string(note.empty() ? "" : "; ") + "a(G) is a repeated eigenvalue";
  CheckBlock mc = ge("connectivity ratio a(G)/a(G_D), multi-split bound", "connectivity-ratio-multi", multi.ratio,
                     multi.bound, kBoundSlack, note);
  if (!multi.positivity) mc.holds = true;
  out.push_back(mc);
  out.push_back(le("a(G_D) <= a(G)", "connectivity-monotone", multi.a_gd, multi.a_g, kBoundSlack));

  if (sys.split_count() == 1) {
    const auto single = connectivity_ratio_bound_single(sys, source);
    out.push_back(ge("connectivity ratio a(G)/a(G_D), single-split bound", "connectivity-ratio-single", single.ratio,
                     single.bound, kBoundSlack));
  }
  if (sys.split_count() >= 1) {
    const auto prod = connectivity_ratio_bound_product(g, sys.plan);
    out.push_back(ge("connectivity ratio a(G)/a(G_D), sequential product bound", "connectivity-ratio-product",
                     prod.ratio, prod.bound, kBoundSlack,
                     prod.fiedler_degenerate ? "an intermediate a(G) is a repeated eigenvalue" : ""));
  }
}

void single_split_checks(const DisaggregatedSystem<double>& sys, const SpectralSummary<double>& source,
                         std::vector<CheckBlock>& out) {
  const auto& grp = sys.groups.front();
  const Index n = sys.original_size();
  const double lmax = source.max_eigenvalue();

  double worst_rq = 0.0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  ResidualBound<double> worst_res;
  for (Index i = 1; i < n; ++i) {
    const double lambda = source.eigenvalues(i);
    if (lambda <= 1e-10 * lmax) continue;
    const Vector<double> phi = source.eigenvectors.col(i);
    const double direct = rayleigh_quotient(sys.laplacian, lift_eigvec(sys, phi));
    const double closed = rq_shrink_single(lambda, phi(grp.vertex), grp.d, n);
    worst_rq = std::max(worst_rq, relative_gap(direct, closed));
    const auto res = residual_bound_single(sys, lambda, phi);
    if (res.lhs - res.rhs > worst_excess) {
      worst_excess = res.lhs - res.rhs;
      worst_res = res;
    }
  }
  out.push_back(le("lifted Rayleigh quotient vs closed form (max relative gap)", "lifted-rayleigh-quotient", worst_rq,
                   0.0, 1e-10));
  if (std::isfinite(worst_excess))
    out.push_back(le("lifted eigenvector residual vs estimate (tightest pair)", "lifted-residual-estimate",
                     worst_res.lhs, worst_res.rhs, kBoundSlack));

  const auto ns = normalized_eigs(laplacian(sys.source));
  double worst_norm = 0.0;
  for (Index i = 1; i < n; ++i) {
    const double nu = ns.eigenvalues(i);
    if (nu <= 1e-10) continue;
    const auto q = normalized_rq(sys, nu, ns.eigenvectors.col(i));
    worst_norm = std::max(worst_norm, relative_gap(q.value, q.closed_form));
  }
  out.push_back(le("normalized lifted Rayleigh quotient vs closed form (max relative gap)",
                   "normalized-lifted-quotient", worst_norm, 0.0, 1e-10));
}

void cheeger_checks(const DisaggregatedSystem<double>& sys, std::vector<CheckBlock>& out) {
  if (sys.original_size() > 16) return;
  const auto ci = cheeger_inequality(sys.source);
  out.push_back(le("Cheeger lower estimate 1 - sqrt(1 - h^2) <= nu_2", "cheeger-lower", ci.lower, ci.nu2, 1e-12));
  out.push_back(le("Cheeger upper estimate nu_2 <= 2h", "cheeger-upper", ci.nu2, ci.upper, 1e-12));
  if (sys.size() > 16 || sys.split_count() == 0) return;
  const auto cr = cheeger_disagg_bound(sys);
  std::string note = "alpha = " + std::to_string(cr.alpha);
  if (cr.monotone_certified) note += "; h(G_D) <= h(G) certified";
  out.push_back(le("h(G_D) <= sqrt(1 - (1 - 2 alpha h(G))^2)", "cheeger-disaggregated", *cr.h_gd, cr.bound, 1e-12,
                   note));
  if (cr.monotone_certified)
    out.push_back(le("h(G_D) <= h(G)", "cheeger-monotone", *cr.h_gd, cr.h_g, 1e-12));
}

void interlacing_checks(const DisaggregatedSystem<double>& sys, const SpectralSummary<double>& source,
                        std::vector<CheckBlock>& out) {
  const auto fine = eigs(sys.scaled_laplacian());
  const auto il = interlacing_check(source, fine);
  const double scale = std::max(source.max_eigenvalue(), fine.max_eigenvalue());
  out.push_back(ge("interlacing margin of spec(A) inside spec(A~_D)", "interlacing", il.min_slack, 0.0,
                   kBoundSlack * scale));
}

void preconditioner_checks(const DisaggregatedSystem<double>& sys, double eps, std::vector<CheckBlock>& out) {
  const auto ledger = edge_thresholds(sys, eps);
  const auto ruled = apply_weight_rule(sys, ledger);
  const double c1 = fictitious_upper_constant(ruled);
  out.push_back(le("upper transfer constant c_1^2 after weight rule", "weight-rule-certificate", c1, 1.0 + eps, 1e-9));

  const Matrix<double> a = laplacian(sys.source);
  const auto exact = build_preconditioner(ruled, InnerKind::exact_pseudoinverse);
  out.push_back(le("kappa(BA), pseudoinverse inner", "transported-condition-exact", condition_estimate(exact.matrix, a),
                   1.0 + eps, 1e-6));

  const auto jac = build_preconditioner(ruled, InnerKind::jacobi);
  const double inner = condition_estimate(jac.inner, ruled.laplacian);
  out.push_back(le("kappa(BA) <= (1 + eps) kappa(B_D A_D), Jacobi inner", "transported-condition-jacobi",
                   condition_estimate(jac.matrix, a), (1.0 + eps) * inner, 1e-6));
}

}  // namespace

nlohmann::json to_json(const CheckBlock& c) {
  nlohmann::json j = {{"name", c.name},   {"anchor", c.anchor}, {"lhs", c.lhs},
                      {"relation", c.relation}, {"rhs", c.rhs}, {"holds", c.holds}, {"tolerance", c.tolerance}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

Report run_checks(const Graph& g, const Plan& plan, double eps, const std::string& input_hash) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!is_connected(g)) throw DomainError("input graph is disconnected");
  const auto sys = apply(g, plan);
  const auto source = eigs(laplacian(g));

  Report r;
  galerkin_checks(sys, r.checks);
  connectivity_checks(g, sys, source, r.checks);
  if (sys.split_count() == 1) single_split_checks(sys, source, r.checks);
  cheeger_checks(sys, r.checks);
  interlacing_checks(sys, source, r.checks);
  preconditioner_checks(sys, eps, r.checks);

  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    if (!std::isfinite(c.lhs) || !std::isfinite(c.rhs))
      throw std::runtime_error("check '" + c.anchor + "' produced a non-finite value");
    r.all_hold = r.all_hold && c.holds;
    checks.push_back(to_json(c));
  }
  r.document = {
      {"tool", {{"name", "disagg"}, {"version", kToolVersion}}},
      {"input", {{"hash", input_hash}, {"vertices", g.size()}, {"edges", g.edge_count()}}},
      {"plan", plan_to_json(sys.plan)},
      {"parameters", {{"eps", eps}}},
      {"checks", checks},
      {"all_hold", r.all_hold},
  };
  return r;
}

}  // namespace disagg::io
