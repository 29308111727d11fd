#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nordheim/equilibrium.hpp"
#include "nordheim/measure.hpp"

using namespace nordheim;

namespace {

DistributionState exponential(const EnergyGrid& g) {
  return DistributionState::sample(g, [](double x) { return std::exp(-x); });
}

DistributionState random_state(const EnergyGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return DistributionState::sample(g, [&](double x) { return u(rng) * std::exp(-0.5 * x); });
}

}  // namespace

TEST(Moment, GammaOracles) {
  const EnergyGrid g(4000, 40.0);
  const auto st = exponential(g);
  // integral x^p e^{-x} sqrt x dx = Gamma(p + 3/2)
  for (double p : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
    const double ex = std::tgamma(p + 1.5);
    EXPECT_NEAR(moment(st, p), ex, 2e-3 * ex) << p;
  }
  // x^{-1/2} is singular at 0: the midpoint error is of order sqrt(h)
  EXPECT_NEAR(moment(st, -1.0), std::sqrt(std::numbers::pi), 0.1);
  EXPECT_EQ(seminorm_1(st), moment(st, 1.0));
  EXPECT_NEAR(norm_k(st, 1.0), moment(st, 0.0) + moment(st, 1.0), 1e-13);
  EXPECT_THROW(norm_k(st, -1.0), DomainError);
}

TEST(Moment, RefinementHalvesError) {
  for (double p : {0.0, 1.0}) {
    const double ex = std::tgamma(p + 1.5);
    const double e1 = std::abs(moment(exponential(EnergyGrid(500, 40.0)), p) - ex);
    const double e2 = std::abs(moment(exponential(EnergyGrid(1000, 40.0)), p) - ex);
    EXPECT_GT(e1 / e2, 2.0) << p;
  }
}

TEST(Entropy, Examples) {
  EXPECT_EQ(entropy_integrand(0.0), 0.0);
  EXPECT_NEAR(entropy_integrand(1.0), 2.0 * std::log(2.0), 1e-15);
  const EnergyGrid g(8, 2.0);
  EXPECT_EQ(entropy(DistributionState::zeros(g)), 0.0);
  const auto one = DistributionState::sample(g, [](double) { return 1.0; });
  EXPECT_NEAR(entropy(one), 4.0 * std::numbers::pi * std::numbers::sqrt2 * 2.0 * std::log(2.0) * moment(one, 0.0), 1e-12);
}

TEST(Dissipation, NonnegativeAndVanishesAtEquilibrium) {
  const EnergyGrid g(24, 8.0);
  const auto t = build_tensor(PotentialModel::eta_rational(1.0, 2.0), g, {16, 16});
  double typical = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double d = entropy_dissipation(random_state(g, seed), t);
    EXPECT_GE(d, 0.0);
    typical = std::max(typical, d);
  }
  const auto eq = fit_discrete_equilibrium(g, moment(random_state(g, 1), 0.0), moment(random_state(g, 1), 1.0));
  ASSERT_TRUE(eq.has_value());
  EXPECT_LT(entropy_dissipation(*eq, t), 1e-12 * typical);
  EXPECT_EQ(entropy_dissipation(DistributionState::zeros(g), t), 0.0);
}

TEST(Dissipation, RejectsForeignTensor) {
  const auto t = build_tensor(PotentialModel::hard_sphere(), EnergyGrid(8, 2.0), {4, 4});
  EXPECT_THROW(entropy_dissipation(DistributionState::zeros(EnergyGrid(8, 3.0)), t), DomainError);
}

TEST(CondensateIndicator, BetaOracle) {
  const EnergyGrid g(20000, 0.02);
  const auto one = DistributionState::sample(g, [](double) { return 1.0; });
  for (double eps : {1e-2, 1e-3}) {
    const double ex = 16.0 / 105.0 * std::pow(eps, 1.5);
    EXPECT_NEAR(condensate_indicator(one, eps), ex, 2e-3 * ex) << eps;
  }
  EXPECT_THROW(condensate_indicator(one, 0.0), DomainError);
}

TEST(CondensateIndicator, MonotoneInEps) {
  const EnergyGrid g(96, 4.0);
  const auto st = random_state(g, 3);
  EXPECT_LE(condensate_indicator(st, 0.05), condensate_indicator(st, 0.5));
  EXPECT_EQ(condensate_indicator(st, 1e-6), 0.0);  // below the first node
}

TEST(TemperatureRatio, ScalingAndErrors) {
  EXPECT_NEAR(temperature_ratio(2.0, 3.0) / temperature_ratio(1.0, 1.5), std::pow(2.0, -2.0 / 3.0), 1e-14);
  EXPECT_THROW(temperature_ratio(0.0, 1.0), DomainError);
  EXPECT_THROW(temperature_ratio(1.0, -1.0), DomainError);
}

TEST(Distance, L1SupTail) {
  const EnergyGrid g(20, 5.0);
  const auto a = random_state(g, 1), b = random_state(g, 2);
  EXPECT_EQ(l1_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l1_distance(a, b), l1_distance(b, a));
  EXPECT_NEAR(l1_distance(a, DistributionState::zeros(g)), norm_k(a, 1.0), 1e-14);
  EXPECT_THROW(l1_distance(a, DistributionState::zeros(EnergyGrid(20, 6.0))), DomainError);
  EXPECT_EQ(sup_norm(a), *std::max_element(a.f.begin(), a.f.end()));
  EXPECT_NEAR(tail_mass(a), (a.f[18] * g.weight(18) + a.f[19] * g.weight(19)), 1e-15);
}

TEST(Diagnostics, RecordFields) {
  const EnergyGrid g(16, 4.0);
  const auto st = random_state(g, 5);
  DiagnosticsSpec spec{{0.5, 0.1}, {0.5, 1.0}};
  const auto r = compute_diagnostics(st, nullptr, spec, &st);
  EXPECT_EQ(r.N, moment(st, 0.0));
  EXPECT_EQ(r.E, moment(st, 1.0));
  ASSERT_EQ(r.M_p.size(), 2u);
  EXPECT_EQ(r.M_p[1].second, moment(st, -1.0));
  ASSERT_EQ(r.I_eps.size(), 2u);
  EXPECT_EQ(r.I_eps[0].first, 0.5);
  EXPECT_EQ(r.D, 0.0);
  EXPECT_EQ(r.L1_to_eq, 0.0);
  EXPECT_EQ(r.S, entropy(st));
}
