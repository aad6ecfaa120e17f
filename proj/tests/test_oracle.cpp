#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "gibbsmh/config.hpp"
#include "gibbsmh/oracle_battery.hpp"

using namespace gibbsmh;

namespace {

WindowPtr share(Window w) { return std::make_shared<const Window>(std::move(w)); }

}  // namespace

TEST(BuildPrecision, GaussianProductIsScaledIdentity) {
  const auto m = InteractionModel::gaussian_product(1, 2.0);
  const auto pm = build_precision(m, build_cube(m, 5));
  EXPECT_TRUE(pm.Q.isApprox(0.5 * Eigen::MatrixXd::Identity(5, 5), 1e-14));
  EXPECT_NEAR(pm.b.norm(), 0.0, 1e-14);
}

// Edges to the boundary enter only through the window site's own potential,
// so the end sites carry 1.5 instead of 2.
TEST(BuildPrecision, FreeFieldIsTridiagonalInOneDimension) {
  const auto m = InteractionModel::gff(1, 1.0, 0.0);
  const auto pm = build_precision(m, build_cube(m, 6));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double diag = i == 0 || i == 5 ? 1.5 : 2.0;
      const double expected = i == j ? diag : (std::abs(i - j) == 1 ? -1.0 : 0.0);
      EXPECT_NEAR(pm.Q(i, j), expected, 1e-12) << i << "," << j;
    }
}

TEST(BuildPrecision, QuadraticFormReproducesHamiltonian) {
  std::mt19937 gen(1);
  std::normal_distribution<double> z;
  for (const auto& m : {InteractionModel::gff(2, 0.7, 0.3), InteractionModel::gaussian_product(2, 0.5)}) {
    for (const auto& bc : {BoundaryCondition::zero(), BoundaryCondition::constant_value(1.5)}) {
      const auto w = build_cube(m, 4, bc);
      const auto pm = build_precision(m, w);
      Energy energy(m, w);
      EXPECT_GT(pm.llt.matrixL().toDenseMatrix().diagonal().minCoeff(), 0.0);
      EXPECT_TRUE(pm.Q.isApprox(pm.Q.transpose(), 1e-14));
      for (int t = 0; t < 20; ++t) {
        std::vector<double> x(w.size());
        for (auto& v : x) v = z(gen);
        EXPECT_NEAR(pm.quadratic_form(x), energy.hamiltonian(x), 1e-9);
      }
    }
  }
}

TEST(BuildPrecision, RejectsNonQuadraticFamily) {
  const auto m = InteractionModel::phi4(1, 1.0, 0.5, 1.0);
  EXPECT_THROW(build_precision(m, build_cube(m, 3)), std::invalid_argument);
}

TEST(GaussianExactSample, ReproducibleAndDistinctAcrossDraws) {
  const auto m = InteractionModel::gff(1, 1.0, 1.0);
  const auto pm = build_precision(m, build_cube(m, 4));
  const CounterRng rng(3, 0);
  EXPECT_EQ(gaussian_exact_sample(pm, rng, 7), gaussian_exact_sample(pm, rng, 7));
  EXPECT_NE(gaussian_exact_sample(pm, rng, 7), gaussian_exact_sample(pm, rng, 8));
}

TEST(GaussianS2Exact, ProductAndScaling) {
  const auto m = InteractionModel::gaussian_product(2);
  EXPECT_NEAR(gaussian_s2_exact(m, build_cube(m, 5)), 1.0, 1e-12);
  // s^2 scales linearly with an overall factor on H.
  for (double lambda : {0.5, 2.0, 3.0}) {
    const auto g = InteractionModel::gaussian_product(2, 1.0 / (lambda * lambda));
    EXPECT_NEAR(gaussian_s2_exact(g, build_cube(g, 5)), lambda * lambda, 1e-10);
  }
  const auto a = InteractionModel::gff(2, 1.0, 1.0), b = InteractionModel::gff(2, 4.0, 4.0);
  EXPECT_NEAR(gaussian_s2_exact(b, build_cube(b, 6)), 4.0 * gaussian_s2_exact(a, build_cube(a, 6)), 1e-9);
}

TEST(Quadrature, RulesIntegratePolynomialsExactly) {
  const auto gl = gauss_legendre(10);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 18);
  EXPECT_NEAR(s, 2.0 / 19.0, 1e-14);
  const auto gh = gauss_hermite_probabilist(20);
  double m4 = 0.0, w = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
    w += gh.weights[i];
  }
  EXPECT_NEAR(w, 1.0, 1e-13);
  EXPECT_NEAR(m4, 3.0, 1e-12);
}

TEST(QuadExpectation1D, Examples) {
  const auto phi = Density1D::normal();
  EXPECT_NEAR(quad_expectation_1d([](double) { return 1.0; }, phi), 1.0, 1e-12);
  const double cos2 = 0.5 * (1 + std::exp(-2.0));
  const auto c = [](double x) { return std::cos(x) * std::cos(x); };
  EXPECT_NEAR(quad_expectation_1d(c, phi), cos2, 1e-8);
  EXPECT_NEAR(quad_expectation_1d(c, phi, false), cos2, 1e-8);
  EXPECT_NEAR(quad_expectation_1d([](double x) { return x * x * x + std::sin(x); }, phi), 0.0, 1e-10);
  EXPECT_NEAR(quad_expectation_1d([](double x) { return x; }, Density1D::normal(2.0, 3.0)), 2.0, 1e-10);
}

TEST(QuadAcceptance, ZeroTauAndArgumentChecks) {
  const auto m = InteractionModel::gaussian_product(1);
  EXPECT_EQ(quad_acceptance(m, build_box(m, 0), 0.0).value, 1.0);
  EXPECT_THROW(quad_acceptance(m, build_cube(m, 3), 1.0), std::invalid_argument);
  EXPECT_THROW(quad_acceptance(m, build_box(m, 0), -1.0), std::invalid_argument);
}

// For a standard normal target and N(0, sigma^2) proposals the acceptance
// rate is (2 / pi) atan(2 / sigma).
TEST(QuadAcceptance, MatchesClosedFormInOneDimension) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = build_box(m, 0);
  for (double tau : {0.25, 1.0, 2.38, 5.0}) {
    const auto q = quad_acceptance(m, w, tau);
    EXPECT_NEAR(q.value, 2 / std::numbers::pi * std::atan(2 / tau), 1e-6) << tau;
    EXPECT_LT(q.error_estimate, 1e-5);
  }
}

TEST(QuadAcceptance, MonotoneInTauForTwoSites) {
  const auto m = InteractionModel::gff(1, 1.0, 1.0);
  const auto w = build_cube(m, 2);
  double prev = 1.0;
  for (double tau : {0.5, 1.0, 2.0, 3.0}) {
    const auto q = quad_acceptance(m, w, tau, IncrementFamily::standard_normal, 1e-5);
    EXPECT_LT(q.value, prev);
    EXPECT_GT(q.value, 0.0);
    prev = q.value;
  }
}

TEST(QuadAcceptance, AgreesWithChainOnNonGaussianSite) {
  const auto m = InteractionModel::phi4(1, 1.0, 0.5, 1.0);
  const auto w = share(build_box(m, 0));
  const double q = quad_acceptance(m, *w, 1.5).value;
  std::vector<ChainRun> runs;
  for (std::uint64_t r = 0; r < 4; ++r)
    runs.push_back(run_chain(m, w, {1.5, IncrementFamily::standard_normal, 1}, 100000, 12, Recording::summary(),
                             BurnInInit{5000, std::nullopt}, r));
  const auto acc = acceptance_rate(std::span<const ChainRun>(runs));
  EXPECT_NEAR(acc.value, q, 4 * acc.std_error);
}

TEST(OracleBattery, AllChecksPass) {
  const auto rows = run_oracle_battery(known_oracle_checks(), 20260101, false);
  EXPECT_GE(rows.size(), 7u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.check << " value=" << r.value << " ref=" << r.reference;
}

TEST(OracleBattery, SeedCorruptionIsDetected) {
  const auto clean = battery::determinism_checks(5, false);
  const auto dirty = battery::determinism_checks(5, true);
  ASSERT_FALSE(clean.empty());
  for (const auto& r : clean) EXPECT_TRUE(r.pass);
  bool any_fail = false;
  for (const auto& r : dirty) any_fail |= !r.pass;
  EXPECT_TRUE(any_fail);
}

TEST(OracleBattery, CheckTableLayout) {
  const std::vector<CheckResult> rows{{"x", 1.0, 1.0, 0.1, true}, {"y", 2.0, 1.0, 0.1, false}};
  const auto t = check_table(rows);
  EXPECT_EQ(t.header, (std::vector<std::string>{"check", "value", "reference", "tolerance", "pass"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][4], "0");
}
