#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nordheim/equilibrium.hpp"

using namespace nordheim;

namespace {

double direct_g(double s, double A) {
  double sum = 0.0;
  for (int m = 200000; m >= 1; --m) sum += std::pow(A, -m) * std::pow(static_cast<double>(m), -s);
  return sum;
}

}  // namespace

TEST(Zeta, KnownValues) {
  const double pi = std::numbers::pi;
  EXPECT_NEAR(zeta(2.0), pi * pi / 6.0, 1e-14);
  EXPECT_NEAR(zeta(4.0), std::pow(pi, 4) / 90.0, 1e-14);
  EXPECT_NEAR(zeta(3.0), 1.2020569031595942, 1e-14);
  EXPECT_NEAR(zeta(1.5), 2.612375, 1e-6);
  EXPECT_NEAR(zeta(2.5), 1.341487, 1e-6);
  EXPECT_NEAR(zeta(1.5), 2.6123753486854883, 1e-13);
  EXPECT_NEAR(zeta(2.5), 1.3414872572509172, 1e-13);
  EXPECT_NEAR(zeta(0.5), -1.4603545088095868, 1e-13);
  EXPECT_EQ(zeta(0.0), -0.5);
  EXPECT_NEAR(zeta(-1.0), -1.0 / 12.0, 1e-14);
  EXPECT_EQ(zeta(-2.0), 0.0);
  EXPECT_NEAR(zeta(-0.5), -0.2078862249773546, 1e-13);
  EXPECT_THROW(zeta(1.0), DomainError);
}

TEST(BoseG, MatchesDirectSum) {
  for (double s : {1.5, 2.0, 2.5, 3.0})
    for (double A : {1.05, 1.5, 2.0, std::exp(1.0), 5.0, 40.0}) {
      const double ref = direct_g(s, A);
      EXPECT_NEAR(bose_g(s, A), ref, 1e-12 * ref) << s << " " << A;
    }
  EXPECT_EQ(bose_g(1.5, 1.0), zeta(1.5));
}

TEST(BoseG, ContinuousAcrossBranches) {
  for (double s : {1.5, 2.0, 2.5}) {
    const double below = bose_g(s, std::exp(1.0 - 1e-12)), above = bose_g(s, std::exp(1.0));
    EXPECT_NEAR(below, above, 1e-11 * above) << s;
  }
  // close to A = 1 the expansion must approach zeta(s)
  EXPECT_NEAR(bose_g(2.5, std::exp(1e-10)), zeta(2.5), 1e-9);
}

TEST(BoseG, IntegerOrderSeriesKeepsTail) {
  // the expansion for integer s meets exact zeros of zeta(s - k) along the way
  EXPECT_NEAR(bose_g(2.0, 1.5), 0.83327188647738992, 1e-15);
}

TEST(BoseG, Errors) {
  EXPECT_THROW(bose_g(1.0, 2.0), DomainError);
  EXPECT_THROW(bose_g(2.0, 0.5), DomainError);
}

TEST(Equilibrium, UnitMassAndEnergy) {
  const auto eq = solve_equilibrium(1.0, 1.0);
  EXPECT_FALSE(eq.condensed());
  EXPECT_NEAR(eq.A, 1.20215, 1e-5);
  EXPECT_NEAR(eq.kappa, 0.884402, 1e-6);
  EXPECT_EQ(eq.n0, 0.0);
  EXPECT_LE(eq.residual_N, 1e-10);
  EXPECT_LE(eq.residual_E, 1e-10);
  EXPECT_GT(eq.ratio, 1.0);
}

TEST(Equilibrium, ReproducesTargets) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double N = std::pow(10.0, u(rng)), E = std::pow(10.0, u(rng));
    const auto eq = solve_equilibrium(N, E);
    EXPECT_LE(eq.residual_N, 1e-10) << N << " " << E;
    EXPECT_LE(eq.residual_E, 1e-10) << N << " " << E;
    EXPECT_EQ(eq.condensed(), eq.ratio <= 1.0);
  }
}

TEST(Equilibrium, CriticalPoint) {
  const double c = critical_energy_shape();
  EXPECT_NEAR(c, 0.4401376855, 1e-10);
  EXPECT_NEAR(temperature_ratio(1.0, c), 1.0, 1e-9);
  EXPECT_NEAR(temperature_ratio(2.0, c * std::pow(2.0, 5.0 / 3.0)), 1.0, 1e-9);
  EXPECT_TRUE(solve_equilibrium(1.0, c * (1.0 - 1e-8)).condensed());
  EXPECT_FALSE(solve_equilibrium(1.0, c * (1.0 + 1e-8)).condensed());
}

TEST(Equilibrium, CondensateBranch) {
  const auto eq = solve_equilibrium(1.0, 0.22);
  EXPECT_TRUE(eq.condensed());
  EXPECT_EQ(eq.A, 1.0);
  EXPECT_NEAR(eq.n0, 0.34037, 1e-5);
  EXPECT_NEAR(eq.n0, eq.n0_from_ratio, 1e-12);
  EXPECT_NEAR(std::pow(eq.kappa, 1.5) * kGamma32 * zeta(1.5) + eq.n0, 1.0, 1e-12);
}

TEST(Equilibrium, DomainErrors) {
  EXPECT_THROW(solve_equilibrium(0.0, 1.0), DomainError);
  EXPECT_THROW(solve_equilibrium(1.0, -1.0), DomainError);
  EXPECT_THROW(solve_equilibrium(1.0, INFINITY), DomainError);
}

TEST(EquilibriumDensity, Values) {
  BoseEinsteinEquilibrium eq;
  eq.kappa = 2.0;
  EXPECT_NEAR(equilibrium_density(eq, 2.0), 1.0 / (std::numbers::e - 1.0), 1e-15);
  eq.log_A = std::log(3.0);
  EXPECT_NEAR(equilibrium_density(eq, 2.0), 1.0 / (3.0 * std::numbers::e - 1.0), 1e-15);
  EXPECT_THROW(equilibrium_density(eq, 0.0), DomainError);
}

TEST(EquilibriumDensity, DiscretizationDriftShrinks) {
  const auto eq = solve_equilibrium(1.0, 1.0);
  const auto a = discretize_equilibrium(eq, EnergyGrid(500, 30.0));
  const auto b = discretize_equilibrium(eq, EnergyGrid(2000, 30.0));
  EXPECT_LT(std::abs(a.drift_N), 1e-2);
  EXPECT_LT(std::abs(b.drift_N), std::abs(a.drift_N) / 2.0);
  EXPECT_LT(std::abs(b.drift_E), std::abs(a.drift_E) / 2.0);
}

TEST(DiscreteEquilibrium, MomentsExact) {
  const EnergyGrid g(96, 16.0);
  for (auto [N, E] : {std::pair{1.0, 1.0}, std::pair{1.0, 3.0}, std::pair{0.5, 0.2}}) {
    const auto st = fit_discrete_equilibrium(g, N, E);
    ASSERT_TRUE(st.has_value()) << N << " " << E;
    EXPECT_NEAR(moment(*st, 0.0), N, 1e-10 * N);
    EXPECT_NEAR(moment(*st, 1.0), E, 1e-10 * E);
    // Bose-Einstein form: log(1 + 1/f) is affine in x
    const auto lg = [&](std::size_t i) { return std::log1p(1.0 / st->f[i]); };
    const double slope = (lg(10) - lg(0)) / (g.x(10) - g.x(0));
    EXPECT_NEAR(lg(50), lg(0) + slope * (g.x(50) - g.x(0)), 1e-9 * std::abs(lg(50)));
  }
}
