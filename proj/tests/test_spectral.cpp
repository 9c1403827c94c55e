#include <doctest.h>

#include <random>

#include "disagg/spectral.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace disagg;

namespace {

DisaggregatedSystem<double> triangle_split() {
  Split<double> sp;
  sp.vertex = 2;
  sp.assignment = {{0, 0}, {1, 1}};
  sp.internal_weights = {1.0};
  DisaggregationPlan<double> plan;
  plan.splits.push_back(sp);
  return apply(corpus::complete(3), plan);
}

}  // namespace

TEST_CASE("complete graph spectrum") {
  for (Index n = 2; n <= 8; ++n) {
    const auto s = eigs(laplacian(corpus::complete(n)));
    CHECK(std::abs(s.eigenvalues(0)) <= 1e-12);
    for (Index i = 1; i < n; ++i) CHECK(s.eigenvalues(i) == doctest::Approx(double(n)).epsilon(1e-12));
    CHECK(s.fiedler_degenerate == (n >= 3));
  }
  const auto p2 = eigs(laplacian(corpus::path(2)));
  CHECK(std::abs(p2.eigenvalues(0)) <= 1e-15);
  CHECK(p2.eigenvalues(1) == doctest::Approx(2.0));
}

TEST_CASE("eigendecomposition recomposes and is orthonormal") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 3, 30), 0.2, true);
    const Matrix<double> a = laplacian(g);
    const auto s = eigs(a);
    const double lmax = s.max_eigenvalue();
    CHECK(std::abs(s.eigenvalues(0)) <= 1e-10 * lmax);
    CHECK(s.algebraic_connectivity() > 0.0);
    const Matrix<double> q = s.eigenvectors;
    CHECK((q * s.eigenvalues.asDiagonal() * q.transpose() - a).cwiseAbs().maxCoeff() <= 1e-11 * lmax);
    CHECK((q.transpose() * q - Matrix<double>::Identity(g.size(), g.size())).cwiseAbs().maxCoeff() <= 1e-12);
    for (Index i = 0; i < g.size(); ++i)
      CHECK((a * q.col(i) - s.eigenvalues(i) * q.col(i)).norm() <= 1e-9 * lmax);
  }
  const auto split = eigs(laplacian(WeightedGraph<double>(4, {{0, 1, 1.0}, {2, 3, 1.0}})));
  CHECK(std::abs(split.algebraic_connectivity()) <= 1e-12);
}

TEST_CASE("eigs rejects nonsymmetric input") {
  Matrix<double> m(2, 2);
  m << 1, 2, 0, 1;
  CHECK_THROWS_AS(eigs(m), ValidationError);
}

TEST_CASE("normalized spectrum lies in [0, 2] with D-orthonormal vectors") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const auto g = corpus::random_connected(rng, 15, 0.3, true);
    const Matrix<double> a = laplacian(g);
    const auto ns = normalized_eigs(a);
    CHECK(std::abs(ns.eigenvalues(0)) <= 1e-12);
    CHECK(ns.eigenvalues.maxCoeff() <= 2.0 + 1e-12);
    const Matrix<double> d = a.diagonal().asDiagonal();
    CHECK((ns.eigenvectors.transpose() * d * ns.eigenvectors - Matrix<double>::Identity(15, 15)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a * ns.fiedler() - ns.nu2() * d * ns.fiedler()).norm() <= 1e-10);
  }
  CHECK_THROWS_AS(normalized_eigs(laplacian(WeightedGraph<double>(3, {{0, 1, 1.0}}))), DomainError);
}

TEST_CASE("single-split Rayleigh quotient closed form") {
  CHECK(rq_shrink_single(2.5, 0.0, 4, 10) == 2.5);
  CHECK(rq_shrink_single(2.5, 0.7, 1, 10) == 2.5);
  CHECK_THROWS_AS(rq_shrink_single(1.0, 0.5, 0, 10), DomainError);

  const auto sys = triangle_split();
  const auto s = eigs(laplacian(sys.source));
  for (Index i = 1; i < 3; ++i) {
    const Vector<double> phi = s.eigenvectors.col(i);
    const double direct = rayleigh_quotient(sys.laplacian, lift_eigvec(sys, phi));
    CHECK(direct == doctest::Approx(rq_shrink_single(s.eigenvalues(i), phi(2), 2, 3)).epsilon(1e-10));
  }

  std::mt19937_64 rng(12);
  for (int t = 0; t < 30; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 4, 25), 0.25, true);
    const auto one = apply(g, corpus::random_single_plan(rng, g, 5));
    const auto src = eigs(laplacian(g));
    const auto& grp = one.groups.front();
    for (Index i = 1; i < g.size(); ++i) {
      const Vector<double> phi = src.eigenvectors.col(i);
      const double direct = rayleigh_quotient(one.laplacian, lift_eigvec(one, phi));
      CHECK(direct == doctest::Approx(rq_shrink_single(src.eigenvalues(i), phi(grp.vertex), grp.d, g.size())).epsilon(1e-10));
    }
  }
}

TEST_CASE("triangle split connectivity") {
  const auto sys = triangle_split();
  const auto r = connectivity_ratio_bound_single(sys, eigs(laplacian(sys.source)));
  CHECK(r.a_g == doctest::Approx(3.0));
  CHECK(r.a_gd == doctest::Approx(2.0));
  CHECK(r.ratio == doctest::Approx(1.5));
  CHECK(r.bound <= 1.5 + 1e-12);
  CHECK(r.holds);
  CHECK(r.monotone);
  CHECK(r.fiedler_degenerate);
}

TEST_CASE("star with centre split") {
  const auto sys = apply(corpus::star(5), corpus::split_vertices({0}, 2));
  const auto r = connectivity_ratio_bound_single(sys, eigs(laplacian(sys.source)));
  CHECK(r.holds);
  CHECK(r.monotone);
  // Every Fiedler vector of a star vanishes at the centre.
  CHECK(r.fiedler_vanishes);
  CHECK(r.bound == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("multi-split bound reduces to the single-split bound") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 5, 20), 0.3, true);
    const auto sys = apply(g, corpus::random_single_plan(rng, g, 5));
    const auto src = eigs(laplacian(g));
    const auto single = connectivity_ratio_bound_single(sys, src);
    const auto multi = connectivity_ratio_bound_multi(sys, src);
    const auto prod = connectivity_ratio_bound_product(g, sys.plan);
    CHECK(multi.bound == doctest::Approx(single.bound).epsilon(1e-14));
    CHECK(prod.bound == doctest::Approx(single.bound).epsilon(1e-12));
    CHECK(single.holds);
  }
  const auto g = corpus::path(6);
  const auto sys = apply(g, corpus::split_vertices({1, 3}, 2));
  CHECK(multi_split_bound(sys, Vector<double>(Vector<double>::Zero(6))) == 1.0);
  const auto empty = connectivity_ratio_bound_product(g, DisaggregationPlan<double>{});
  CHECK(empty.bound == 1.0);
  CHECK(empty.ratio == doctest::Approx(1.0));
}

TEST_CASE("multi-split and product bounds hold on random plans") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, 20, 0.2, true);
    auto plan = corpus::random_plan(rng, g, 2, 4);
    while (plan.split_count() < 2) plan = corpus::random_plan(rng, g, 2, 4);
    const auto sys = apply(g, plan);
    const auto multi = connectivity_ratio_bound_multi(sys, eigs(laplacian(g)));
    CHECK(multi.positivity);
    CHECK(multi.holds);
    CHECK(multi.monotone);

    const auto g15 = corpus::random_connected(rng, 15, 0.25, true);
    const auto prod = connectivity_ratio_bound_product(g15, corpus::split_vertices({2, 9}, 3));
    CHECK(prod.holds);
    CHECK(prod.monotone);
  }
}

TEST_CASE("residual estimate") {
  SUBCASE("triangle split") {
    const auto sys = triangle_split();
    const auto s = eigs(laplacian(sys.source));
    for (Index i = 1; i < 3; ++i) CHECK(residual_bound_single(sys, s.eigenvalues(i), s.eigenvectors.col(i)).holds);
  }
  SUBCASE("vanishing split entry") {
    const auto sys = apply(corpus::path(5), corpus::split_vertices({2}, 3));
    const auto s = eigs(laplacian(sys.source));
    // Eigenvectors of the path with odd index vanish at the middle vertex.
    const Vector<double> phi = s.eigenvectors.col(2);
    CHECK(std::abs(phi(2)) > 1e-3);
    const Vector<double> odd = s.eigenvectors.col(1);
    REQUIRE(std::abs(odd(2)) <= 1e-12);
    const auto r = residual_bound_single(sys, s.eigenvalues(1), odd);
    CHECK(r.holds);
    CHECK(std::isfinite(r.rhs));
  }
}

TEST_CASE("normalized lifted quotient equals its closed form") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 4, 20), 0.3, true);
    const auto sys = apply(g, corpus::random_single_plan(rng, g, 4));
    const auto ns = normalized_eigs(laplacian(g));
    for (Index i = 1; i < g.size(); ++i) {
      const auto q = normalized_rq(sys, ns.eigenvalues(i), ns.eigenvectors.col(i));
      CHECK(q.value == doctest::Approx(q.closed_form).epsilon(1e-10));
    }
  }
}

TEST_CASE("Cheeger constant") {
  CHECK(cheeger_exact(corpus::complete(4)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(cheeger_exact(corpus::path(2)) == doctest::Approx(1.0));
  CHECK(cheeger_exact(WeightedGraph<double>(4, {{0, 1, 1.0}, {2, 3, 1.0}})) == 0.0);
  CHECK_THROWS_AS(cheeger_exact(corpus::path(17)), SizeError);
  CHECK_THROWS_AS(cheeger_exact(corpus::path(1)), DomainError);

  const auto k4 = cheeger_inequality(corpus::complete(4));
  CHECK(k4.nu2 == doctest::Approx(4.0 / 3.0));
  CHECK(k4.holds);

  std::mt19937_64 rng(16);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 2, 11), 0.3, true);
    CHECK(cheeger_exact(g) == doctest::Approx(oracle::cheeger(g)).epsilon(1e-14));
    CHECK(cheeger_inequality(g).holds);
  }
}

TEST_CASE("disaggregated Cheeger bound") {
  CHECK(cheeger_disagg_value(0.25, 1.0) == doctest::Approx(std::sqrt(0.75)));
  CHECK(cheeger_disagg_value(1.0, 1.0) == 1.0);
  CHECK(cheeger_disagg_value(1.0, 0.0) == 0.0);

  const auto edge = apply(corpus::path(2), DisaggregationPlan<double>{});
  const auto trivial = cheeger_disagg_bound(edge);
  CHECK(trivial.alpha == 1.0);
  CHECK(trivial.holds);

  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 4, 10), 0.3, true);
    const auto sys = apply(g, corpus::random_plan(rng, g, 2, 3));
    if (sys.size() > 16) continue;
    const auto r = cheeger_disagg_bound(sys);
    CHECK(r.alpha > 0.0);
    CHECK(r.alpha <= 1.0);
    REQUIRE(r.h_gd.has_value());
    CHECK(r.holds);
    CHECK(r.monotone_holds);
    // alpha bounds the normalized algebraic connectivity.
    CHECK(normalized_eigs(sys.laplacian).nu2() <= r.alpha * normalized_eigs(laplacian(g)).nu2() + 1e-9);
  }
}

TEST_CASE("interlacing of A and the scaled disaggregated Laplacian") {
  std::mt19937_64 rng(18);
  for (int t = 0; t < 30; ++t) {
    const auto g = corpus::random_connected(rng, corpus::pick(rng, 5, 25), 0.2, true);
    const auto sys = apply(g, corpus::random_plan(rng, g, 3, 5));
    CHECK(interlacing_check(eigs(laplacian(g)), eigs(sys.scaled_laplacian())).holds);
  }
  Vector<double> coarse(2), fine(3);
  coarse << 0.0, 2.0;
  fine << 0.0, 3.0, 4.0;
  CHECK_FALSE(interlacing_check(coarse, fine).holds);
}

TEST_CASE("weight sweep on the star") {
  const std::vector<double> sweep{1, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  const auto t = conjecture_probe(corpus::star(5), corpus::split_vertices({0}, 2), sweep);
  CHECK(t.inconclusive);
  REQUIRE(t.rows.size() == sweep.size());
  for (const auto& row : t.rows) {
    CHECK(row.holds);
    CHECK(row.a_gd < row.a_g);
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].a_gd >= t.rows[i - 1].a_gd - 1e-12);
  CHECK_THROWS_AS(conjecture_probe(corpus::star(5), corpus::split_vertices({0}, 2), {0.0}), DomainError);
}

TEST_CASE("weight sweep keeps a gap when the split entry is nonzero") {
  // Path 0-1-2-3-4-5 with a pendant at vertex 1: vertex 1 carries a large
  // Fiedler entry.
  const WeightedGraph<double> g(7, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {1, 6, 1.0}});
  const auto t = conjecture_probe(g, corpus::split_vertices({1}, 2), {1, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6});
  CHECK_FALSE(t.inconclusive);
  CHECK(t.ratio_bound > 1.01);
  for (const auto& row : t.rows) {
    CHECK(row.holds);
    CHECK(row.a_g - row.a_gd >= row.a_g - row.bound - 1e-9);
    CHECK(row.a_g - row.bound > 1e-3);
  }
}
