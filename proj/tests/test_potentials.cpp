#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "nordheim/potentials.hpp"

using namespace nordheim;

namespace {

std::vector<double> dense_r() {
  std::vector<double> r{0.0};
  for (int i = 0; i <= 600; ++i) r.push_back(std::pow(10.0, -6.0 + 10.0 * i / 600.0));
  return r;
}

std::vector<double> dense_a() {
  std::vector<double> a;
  for (int i = 1; i <= 40; ++i) a.push_back(1.0 + (std::sqrt(2.0) - 1.0) * i / 40.0);
  return a;
}

}  // namespace

TEST(PhiHat, HardSphereIsHalf) {
  const auto m = PotentialModel::hard_sphere();
  EXPECT_EQ(phi_hat(m, 3.7), 0.5);
  EXPECT_EQ(phi_hat(m, 0.0), 0.5);
}

TEST(PhiHat, EtaRationalValues) {
  const auto m = PotentialModel::eta_rational(1.0, 2.0);
  EXPECT_DOUBLE_EQ(phi_hat(m, 1.0), 0.5);
  EXPECT_EQ(phi_hat(m, 0.0), 0.0);
  EXPECT_NEAR(phi_hat(m, std::sqrt(2.0)), 2.0 / 3.0, 1e-15);
}

TEST(PhiHat, NegativeRadiusThrows) {
  EXPECT_THROW(phi_hat(PotentialModel::hard_sphere(), -1.0), DomainError);
}

TEST(PhiHat, SquaredArgumentPathAgrees) {
  for (double eta : {1.0, 1.5, 2.0, 3.0}) {
    const auto m = PotentialModel::eta_rational(0.7, eta);
    for (double r : {1e-3, 0.2, 1.0, 2.5, 40.0}) EXPECT_NEAR(m.phi_hat_sq(r * r), phi_hat(m, r), 1e-14);
  }
}

TEST(PhiHat, EtaRationalMonotoneAndBounded) {
  const auto m = PotentialModel::eta_rational(1.3, 1.7);
  double prev = -1.0;
  for (double r : dense_r()) {
    const double p = phi_hat(m, r);
    EXPECT_GE(p, prev);
    EXPECT_LE(p, 1.3);
    prev = p;
  }
}

TEST(PhiHat, TableInterpolatesAndClamps) {
  const auto m = PotentialModel::tabulated({0.0, 1.0, 2.0}, {0.0, 0.5, 0.5}, KScaling::power(1.0), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(phi_hat(m, 0.25), 0.125);
  EXPECT_DOUBLE_EQ(phi_hat(m, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(phi_hat(m, 100.0), 0.5);
}

TEST(PhiHat, TableFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "nordheim_table_test.txt";
  {
    std::ofstream out(path);
    out << "# r phi\n0 0\n1, 0.5\n3 0.5\n";
  }
  const auto m = PotentialModel::from_table_file(path.string(), KScaling::expression("a"), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(phi_hat(m, 0.5), 0.25);
  EXPECT_EQ(m.descriptor(), "table " + path.string());
  std::filesystem::remove(path);
}

TEST(PhiHat, BadTablesRejected) {
  EXPECT_THROW(PotentialModel::tabulated({0.0}, {0.0}, KScaling::one(), 1.0, 1.0), ModelError);
  EXPECT_THROW(PotentialModel::tabulated({0.0, 0.0}, {0.0, 1.0}, KScaling::one(), 1.0, 1.0), ModelError);
  EXPECT_THROW(PotentialModel::from_table_file("/nonexistent/table", KScaling::one(), 1.0, 1.0), ModelError);
}

TEST(BigPhi, Values) {
  EXPECT_EQ(big_phi(PotentialModel::hard_sphere(), 0.3, 7.0), 1.0);
  const auto m = PotentialModel::eta_rational(1.0, 2.0);
  EXPECT_DOUBLE_EQ(big_phi(m, 1.0, 1.0), 1.0);
  EXPECT_EQ(big_phi(m, 0.0, 0.0), 0.0);
}

TEST(BigPhi, SymmetricExactly) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const auto m = PotentialModel::eta_rational(0.9, 1.4);
  for (int i = 0; i < 1000; ++i) {
    const double r = u(rng), s = u(rng);
    EXPECT_EQ(big_phi(m, r, s), big_phi(m, s, r));
  }
}

TEST(BigPhi, CapApplies) {
  const auto m = PotentialModel::eta_rational(1.0, 2.0).with_cap(0.5);
  EXPECT_DOUBLE_EQ(big_phi(m, 10.0, 10.0), 0.5);
  EXPECT_NE(m.descriptor(), PotentialModel::eta_rational(1.0, 2.0).descriptor());
  EXPECT_THROW(PotentialModel::hard_sphere().with_cap(0.0), ModelError);
}

TEST(Q1, ClosedForms) {
  EXPECT_NEAR(PotentialModel::eta_rational(1.0, 1.0).q1(), 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(PotentialModel::eta_rational(1.0, 2.0).q1(), 8.0 * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(PotentialModel::hard_sphere().q1(), 0.0);
}

TEST(Q1, ExpressionGrammarMatchesPower) {
  const auto t = PotentialModel::tabulated({0.0, 1.0}, {0.0, 0.5}, KScaling::expression("a^2"), 1.0, 2.0);
  EXPECT_NEAR(t.q1(), 8.0 * std::sqrt(2.0), 1e-12);
  const auto r = PotentialModel::tabulated({0.0, 1.0}, {0.0, 0.5}, KScaling::expression("2*a/(1+a)"), 1.0, 1.0);
  // 2 k k' = 8 a / (1+a)^3, decreasing on [1, sqrt 2]: maximum 1 at a = 1
  EXPECT_NEAR(r.q1(), 1.0, 1e-12);
}

TEST(Q1, SampleRefinementStable) {
  const auto m = PotentialModel::tabulated({0.0, 1.0}, {0.0, 0.5}, KScaling::expression("(3*a^2 - 1)/2"), 1.0, 1.0);
  EXPECT_NEAR(compute_q1(m, 4097), compute_q1(m, 16385), 1e-6);
}

TEST(Q1, NonFiniteKRejected) {
  EXPECT_THROW(PotentialModel::tabulated({0.0, 1.0}, {0.0, 0.5}, KScaling::expression("(1.2 - a)^0.5 - 0.2^0.5 + 1"), 1.0, 1.0),
               ModelError);
  EXPECT_THROW(PotentialModel::tabulated({0.0, 1.0}, {0.0, 0.5}, KScaling::expression("2*a"), 1.0, 1.0), ModelError);
  EXPECT_THROW(KScaling::expression("a +* 2"), ModelError);
}

TEST(CheckAssumption, EtaRationalConsistent) {
  for (double eta : {1.0, 2.0, 3.5}) {
    const auto rep = check_assumption(PotentialModel::eta_rational(1.0, eta), dense_r(), dense_a());
    EXPECT_TRUE(rep.ok()) << "eta=" << eta << " violations=" << rep.violations.size();
    EXPECT_GT(rep.checks, 1000u);
  }
}

TEST(CheckAssumption, HardSphereFailsEnvelopeAtSmallR) {
  const auto rep = check_assumption(PotentialModel::hard_sphere(), dense_r(), dense_a());
  ASSERT_GT(rep.count("upper_envelope"), 0u);
  EXPECT_EQ(rep.count("nonnegative"), 0u);
  bool small = false;
  for (const auto& v : rep.violations)
    if (v.inequality == "upper_envelope" && v.witness[0] < 1.0) small = true;
  EXPECT_TRUE(small);
}

TEST(CheckAssumption, TabulatedMinRConsistent) {
  std::vector<double> r, p;
  for (int i = 0; i <= 200; ++i) {
    r.push_back(0.01 * i);
    p.push_back(0.5 * std::min(0.01 * i, 1.0));
  }
  const auto m = PotentialModel::tabulated(r, p, KScaling::expression("a"), 1.0, 1.0);
  auto rs = dense_r();
  rs.push_back(0.5);
  auto as = dense_a();
  as.push_back(std::sqrt(2.0));
  const auto rep = check_assumption(m, rs, as);
  EXPECT_TRUE(rep.ok()) << rep.violations.size();
}

TEST(CheckAssumption, DetectsScalingViolation) {
  // claims k(a) = 1 although phi_hat grows
  const auto m = PotentialModel::tabulated({0.0, 1.0, 2.0}, {0.0, 0.4, 0.45}, KScaling::one(), 1.0, 1.0);
  const auto rep = check_assumption(m, dense_r(), dense_a());
  EXPECT_GT(rep.count("scaling"), 0u);
}

TEST(Descriptor, CanonicalStrings) {
  EXPECT_EQ(PotentialModel::hard_sphere().descriptor(), "hard_sphere");
  EXPECT_EQ(PotentialModel::eta_rational(1.0, 2.0).descriptor(), "eta_rational b0=1 eta=2");
  EXPECT_EQ(PotentialModel::eta_rational(0.25, 1.5).descriptor(), "eta_rational b0=0.25 eta=1.5");
  EXPECT_EQ(PotentialModel::hard_sphere().hash(), fnv1a64("hard_sphere"));
  EXPECT_EQ(fnv1a64(""), 14695981039346656037ull);
}

TEST(LowerBound, Validation) {
  const auto m = PotentialModel::eta_rational(1.0, 2.0).with_lower_bound({0.1, 0.2, 1.0});
  ASSERT_TRUE(m.lower_bound().has_value());
  EXPECT_DOUBLE_EQ(m.lower_bound()->beta, 0.2);
  EXPECT_THROW(PotentialModel::hard_sphere().with_lower_bound({0.1, 0.5, 0.0}), ModelError);
  EXPECT_TRUE(has_positive_monotone_lower_bound(m));
}
