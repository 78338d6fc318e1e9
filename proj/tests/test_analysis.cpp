#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "fairdyn/analysis.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace fairdyn;

namespace {

const Equilibrium& find_kind(const std::vector<Equilibrium>& eqs, EquilibriumKind k) {
  for (const auto& e : eqs)
    if (e.kind == k) return e;
  throw std::runtime_error("kind not found");
}

}  // namespace

TEST(Equilibria, BaselineShared) {
  const auto eqs = analytic_equilibria(fixtures::baseline());
  ASSERT_EQ(eqs.size(), 3u);
  const auto& a = find_kind(eqs, EquilibriumKind::UndesirableProtectedZero);
  const auto& b = find_kind(eqs, EquilibriumKind::UndesirableNonprotectedZero);
  const auto& c = find_kind(eqs, EquilibriumKind::Desirable);
  EXPECT_EQ(a.point, (GroupState{0.0, 2.5}));
  EXPECT_EQ(b.point, (GroupState{5.0, 0.0}));
  EXPECT_NEAR(c.point.mu_c, 5.0 / 3.0, 1e-15);
  EXPECT_EQ(c.point.mu_c, c.point.mu_nc);
  for (const auto& e : eqs) {
    EXPECT_TRUE(e.verified) << to_string(e.kind);
    EXPECT_LT(e.residual, 1e-8);
    EXPECT_EQ(e.source, EquilibriumSource::Analytic);
  }
}

TEST(Equilibria, BaselineDemographicParity) {
  const auto eqs = analytic_equilibria(fixtures::baseline(Policy::DemographicParity));
  ASSERT_EQ(eqs.size(), 1u);
  EXPECT_EQ(eqs[0].kind, EquilibriumKind::DPUnique);
  EXPECT_NEAR(eqs[0].point.mu_nc, 5.0 / 3.0, 1e-15);
  EXPECT_TRUE(eqs[0].verified);
}

TEST(Equilibria, NoneWithoutDecay) {
  EXPECT_THROW(analytic_equilibria(fixtures::make(100, 200, 50, 0.0, 5.0)), SolverError);
}

TEST(Equilibria, NearestEquilibrium) {
  const auto eqs = analytic_equilibria(fixtures::baseline());
  EXPECT_EQ(eqs[static_cast<std::size_t>(nearest_equilibrium(eqs, {0.2, 2.3}))].kind,
            EquilibriumKind::UndesirableProtectedZero);
  EXPECT_EQ(nearest_equilibrium({}, {0.2, 2.3}), -1);
}

TEST(Refine, ConvergesToAttractors) {
  const Scenario s = fixtures::baseline();
  const auto a = refine_equilibrium(s, {0.3, 2.2}, 1e-10);
  EXPECT_EQ(a.kind, EquilibriumKind::UndesirableProtectedZero);
  EXPECT_EQ(a.source, EquilibriumSource::Refined);
  EXPECT_NEAR(a.point.mu_nc, 2.5, 1e-8);
  EXPECT_TRUE(a.verified);
  // The diagonal point repels along the gap direction.
  const auto b = refine_equilibrium(s, {1.7, 1.6}, 1e-10);
  EXPECT_EQ(b.kind, EquilibriumKind::UndesirableNonprotectedZero);
  const auto c = refine_equilibrium(fixtures::baseline(Policy::DemographicParity), {4.0, 0.5}, 1e-12);
  EXPECT_EQ(c.kind, EquilibriumKind::DPUnique);
  EXPECT_NEAR(c.point.mu_c, 5.0 / 3.0, 1e-11);
}

TEST(Refine, ReportsLastIterateOnFailure) {
  try {
    refine_equilibrium(fixtures::baseline(), {1.0, 2.0}, 1e-12, 2);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 1e-12);
    EXPECT_GE(e.last_iterate().mu_c, 0.0);
  }
  EXPECT_THROW(refine_equilibrium(fixtures::baseline(), {1.0, 2.0}, 0.0), std::domain_error);
}

TEST(Jacobian, DemographicParityIsDecay) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> mean(0.05, 5.0);
  for (Family f : {Family::Exponential, Family::Pareto, Family::Gaussian}) {
    for (int i = 0; i < 30; ++i) {
      const Scenario s = fixtures::random_scenario(rng, f, Policy::DemographicParity);
      const GroupState x{mean(rng), mean(rng)};
      const Matrix2 expected = Matrix2::diag(1.0 - s.alpha(), 1.0 - s.alpha());
      EXPECT_LT(max_abs_diff(fd_jacobian(s, x, JacobianMode::Full), expected), 1e-6);
      EXPECT_LT(max_abs_diff(fd_jacobian(s, x, JacobianMode::ThetaFrozen), expected), 1e-6);
    }
  }
}

TEST(Jacobian, FiniteDifferenceOfLinearMap) {
  // With alpha = 1 and a tiny gain the map is nearly constant.
  const Scenario s = fixtures::make(100, 200, 50, 1.0, 1e-9);
  EXPECT_LT(max_abs_diff(fd_jacobian(s, {1.0, 2.0}, JacobianMode::Full), Matrix2::diag(0.0, 0.0)), 1e-6);
}

TEST(Jacobian, ForwardDifferenceAtBoundary) {
  const Scenario s = fixtures::baseline(Policy::DemographicParity);
  const Matrix2 J = fd_jacobian(s, {0.0, 0.0}, JacobianMode::Full);
  EXPECT_LT(max_abs_diff(J, Matrix2::diag(0.5, 0.5)), 1e-9);
}

TEST(Jacobian, ExponentialDesirable) {
  const Scenario s = fixtures::baseline();
  const auto& e = find_kind(analytic_equilibria(s), EquilibriumKind::Desirable);
  const auto aj = analytic_jacobian(s, e);
  ASSERT_TRUE(aj);
  const double lambda = 0.5 - 0.5 * std::log(1.0 / 6.0);
  EXPECT_NEAR(lambda, 1.3959, 5e-5);
  EXPECT_EQ(aj->mode, JacobianMode::ThetaFrozen);
  EXPECT_LT(max_abs_diff(aj->matrix, Matrix2::diag(lambda, lambda)), 1e-14);
  EXPECT_LT(max_abs_diff(fd_jacobian(s, e.point, JacobianMode::ThetaFrozen), aj->matrix), 1e-5);
}

TEST(Jacobian, GaussianDesirable) {
  const Scenario s = fixtures::baseline().with_distribution(DistributionSpec::gaussian(0.5));
  const auto& e = find_kind(analytic_equilibria(s), EquilibriumKind::Desirable);
  const auto aj = analytic_jacobian(s, e);
  ASSERT_TRUE(aj);
  const double z = oracle::bisect_increasing([](double x) { return oracle::normal_cdf(x) - 5.0 / 6.0; }, 0.0, 3.0, 80);
  const double lambda = 0.5 + 5.0 / 0.5 * oracle::normal_pdf(z);
  EXPECT_NEAR(lambda, 2.99851, 1e-5);
  EXPECT_LT(max_abs_diff(aj->matrix, Matrix2::diag(lambda, lambda)), 1e-9);
  EXPECT_LT(max_abs_diff(fd_jacobian(s, e.point, JacobianMode::ThetaFrozen), aj->matrix), 1e-5);
}

TEST(Jacobian, ParetoDesirable) {
  const Scenario s = fixtures::baseline().with_distribution(DistributionSpec::pareto(3.0));
  const auto& e = find_kind(analytic_equilibria(s), EquilibriumKind::Desirable);
  const auto aj = analytic_jacobian(s, e);
  ASSERT_TRUE(aj);
  EXPECT_EQ(aj->mode, JacobianMode::Full);
  // Differentiate the closed-form probabilities by hand: P_g = n mu_g^k / S.
  const Matrix2 expected{{1.5, -1.0, -0.5, 1.0}};
  EXPECT_LT(max_abs_diff(aj->matrix, expected), 1e-12);
  EXPECT_LT(max_abs_diff(fd_jacobian(s, e.point, JacobianMode::Full), expected), 1e-5);
  const auto ev = eigen2(expected);
  EXPECT_NEAR(ev[0].real(), 2.0, 1e-12);
  EXPECT_NEAR(ev[1].real(), 0.5, 1e-12);
}

TEST(Jacobian, AxisPointsDecay) {
  const Scenario s = fixtures::baseline();
  for (const auto& e : analytic_equilibria(s)) {
    if (e.kind == EquilibriumKind::Desirable) continue;
    const auto aj = analytic_jacobian(s, e);
    ASSERT_TRUE(aj);
    EXPECT_TRUE(aj->approximate);
    EXPECT_LT(max_abs_diff(fd_jacobian(s, e.point, aj->mode), aj->matrix), 1e-5);
  }
}

TEST(Eigen2, KnownMatrices) {
  auto ev = eigen2(Matrix2::diag(0.5, 2.0));
  EXPECT_DOUBLE_EQ(ev[0].real(), 2.0);
  EXPECT_DOUBLE_EQ(ev[1].real(), 0.5);
  ev = eigen2(Matrix2{{0.0, -1.0, 1.0, 0.0}});
  EXPECT_DOUBLE_EQ(ev[0].real(), 0.0);
  EXPECT_DOUBLE_EQ(std::fabs(ev[0].imag()), 1.0);
  EXPECT_DOUBLE_EQ(ev[0].imag(), -ev[1].imag());
  ev = eigen2(Matrix2{{1.0, 1.0, 0.0, 1.0}});
  EXPECT_DOUBLE_EQ(ev[0].real(), 1.0);
  EXPECT_DOUBLE_EQ(ev[1].real(), 1.0);
  ev = eigen2(Matrix2{{1.0, 1e-9, 1e-9, 1.0 + 1e-12}});
  EXPECT_NEAR(ev[0].real(), 1.0 + 5e-13 + std::sqrt(0.25e-24 + 1e-18), 3e-16);
  EXPECT_EQ(classify(eigen2(Matrix2::diag(0.5, 0.5))), Stability::Stable);
  EXPECT_EQ(classify(eigen2(Matrix2::diag(1.1, 0.5))), Stability::Unstable);
  EXPECT_EQ(classify(eigen2(Matrix2::diag(1.0 + 1e-8, -1.0))), Stability::Marginal);
}

TEST(Eigen2, PropertyRootsOfCharacteristicPolynomial) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const Matrix2 m{{u(rng), u(rng), u(rng), u(rng)}};
    const auto ev = eigen2(m);
    const double scale = 1.0 + std::abs(ev[0]) * std::abs(ev[0]);
    for (const auto& l : ev) {
      const std::complex<double> p = l * l - m.trace() * l + m.det();
      EXPECT_LT(std::abs(p), 1e-10 * scale);
    }
    EXPECT_NEAR((ev[0] + ev[1]).real(), m.trace(), 1e-10 * (1.0 + std::fabs(m.trace())));
    EXPECT_NEAR((ev[0] * ev[1]).real(), m.det(), 1e-9 * (1.0 + std::fabs(m.det())));
    EXPECT_GE(std::abs(ev[0]), std::abs(ev[1]));
  }
}

TEST(Instability, Exponential) {
  const auto c = instability_condition(fixtures::baseline());
  ASSERT_EQ(c.predicates.size(), 1u);
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.margin, 1.0 / std::numbers::e - 1.0 / 6.0, 1e-15);
  EXPECT_TRUE(c.jacobian_unstable);
  EXPECT_NEAR(c.jacobian_radius, 1.3959, 5e-5);
  const auto d = instability_condition(fixtures::make(100, 200, 150, 0.5, 5.0));
  EXPECT_FALSE(d.holds);
  EXPECT_FALSE(d.jacobian_unstable);
}

TEST(Instability, PropertyExponentialPredicateMatchesJacobian) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 2000; ++i) {
    const Scenario s = fixtures::random_scenario(rng, Family::Exponential);
    const auto c = instability_condition(s);
    if (std::fabs(c.margin) < 1e-5) continue;
    EXPECT_EQ(c.holds, c.jacobian_unstable);
  }
}

TEST(Instability, ParetoPredicates) {
  const Scenario s = fixtures::baseline().with_distribution(DistributionSpec::pareto(3.0));
  const auto c = instability_condition(s);
  ASSERT_EQ(c.predicates.size(), 2u);
  EXPECT_NEAR(3.0 - c.predicates[0].margin, 300.0 / (std::sqrt(20000.0) - 1.0), 1e-12);
  EXPECT_NEAR(300.0 / (std::sqrt(20000.0) - 1.0), 2.136, 5e-4);
  EXPECT_TRUE(c.predicates[0].holds);
  EXPECT_FALSE(c.predicates[1].holds);
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.jacobian_radius, 2.0, 1e-12);
  EXPECT_FALSE(instability_condition(fixtures::baseline().with_distribution(DistributionSpec::pareto(2.0))).holds);
}

TEST(Instability, GaussianPredicate) {
  const Scenario s = fixtures::baseline().with_distribution(DistributionSpec::gaussian(0.5));
  EXPECT_NEAR(gaussian_sigma_bound(s), 5.0 / 1.5 * 0.249850941, 1e-8);
  EXPECT_NEAR(gaussian_sigma_bound(s), 0.83284, 5e-6);
  EXPECT_TRUE(instability_condition(s).holds);
  EXPECT_FALSE(instability_condition(s.with_distribution(DistributionSpec::gaussian(1.0))).holds);
  // The Jacobian itself stays unstable until sigma = beta phi / alpha.
  EXPECT_TRUE(instability_condition(s.with_distribution(DistributionSpec::gaussian(1.0))).jacobian_unstable);
  EXPECT_FALSE(instability_condition(s.with_distribution(DistributionSpec::gaussian(3.0))).jacobian_unstable);
}

TEST(StabilityReport, Baseline) {
  const Scenario s = fixtures::baseline();
  for (const auto& e : analytic_equilibria(s)) {
    const auto r = stability_report(s, e);
    if (e.kind == EquilibriumKind::Desirable) {
      ASSERT_TRUE(r.criterion);
      EXPECT_EQ(r.fd_frozen.verdict, Stability::Unstable);
      EXPECT_EQ(r.fd_full.verdict, Stability::Unstable);
    } else {
      EXPECT_FALSE(r.criterion);
      EXPECT_EQ(r.fd_full.verdict, Stability::Stable);
    }
    ASSERT_TRUE(r.analytic_assessment);
  }
  const auto dp = analytic_equilibria(fixtures::baseline(Policy::DemographicParity));
  const auto r = stability_report(fixtures::baseline(Policy::DemographicParity), dp[0]);
  EXPECT_EQ(r.fd_full.verdict, Stability::Stable);
  EXPECT_NEAR(r.fd_full.eigenvalues[0].real(), 0.5, 1e-6);
}

TEST(Grid, PointLayout) {
  const GridSpec g{5.0, 21};
  EXPECT_EQ(grid_point(g, 0), (GroupState{0.0, 0.0}));
  EXPECT_EQ(grid_point(g, 1), (GroupState{0.0, 0.25}));
  EXPECT_EQ(grid_point(g, 21), (GroupState{0.25, 0.0}));
  EXPECT_EQ(grid_point(g, 440), (GroupState{5.0, 5.0}));
  EXPECT_THROW(validate(GridSpec{5.0, 1}), std::domain_error);
  EXPECT_THROW(validate(GridSpec{0.0, 5}), std::domain_error);
}

TEST(Basin, BaselineSplitsAlongDiagonal) {
  const Scenario s = fixtures::baseline();
  const BasinMap map = basin_map(s, {5.0, 21}, 500, 1e-6, 2);
  ASSERT_EQ(map.cells.size(), 441u);
  for (const auto& c : map.cells) {
    const double eta = c.start.gap();
    if (std::fabs(eta) < 0.05) continue;
    ASSERT_GE(c.attractor, 0) << c.start.mu_c << "," << c.start.mu_nc;
    const auto kind = map.attractors[static_cast<std::size_t>(c.attractor)].kind;
    EXPECT_EQ(kind, eta > 0 ? EquilibriumKind::UndesirableProtectedZero : EquilibriumKind::UndesirableNonprotectedZero);
    EXPECT_LE(c.steps, 500u);
  }
  // The origin cannot be solved under a shared threshold.
  EXPECT_EQ(map.cells[0].attractor, -1);
}

TEST(Basin, WorkerCountDoesNotChangeResult) {
  const Scenario s = fixtures::baseline().with_distribution(DistributionSpec::gaussian(0.8));
  const auto a = basin_map(s, {3.0, 9}, 300, 1e-6, 1);
  const auto b = basin_map(s, {3.0, 9}, 300, 1e-6, 4);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].attractor, b.cells[i].attractor);
    EXPECT_EQ(a.cells[i].steps, b.cells[i].steps);
  }
}

TEST(Phase, BaselineField) {
  const Scenario s = fixtures::baseline();
  const auto rows = phase_field(s, {5.0, 21}, 2);
  ASSERT_EQ(rows.size(), 441u);
  EXPECT_FALSE(rows[0].ok);
  EXPECT_EQ(rows[0].u, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_TRUE(rows[i].ok);
    const GroupState next = step(s, {rows[i].mu_c, rows[i].mu_nc});
    EXPECT_DOUBLE_EQ(rows[i].u, next.mu_c - rows[i].mu_c);
  }
  EXPECT_NEAR(default_grid_extent(s), 5.25, 1e-12);
}
