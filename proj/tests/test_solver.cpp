#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "naive_collision.hpp"
#include "nordheim/equilibrium.hpp"
#include "nordheim/solver.hpp"

using namespace nordheim;

namespace {

DistributionState random_state(const EnergyGrid& g, std::uint64_t seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return DistributionState::sample(g, [&](double x) { return amp * u(rng) * std::exp(-0.3 * x); });
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

const KernelTensor& eta2_tensor() {
  static const KernelTensor t = build_tensor(PotentialModel::eta_rational(1.0, 2.0), EnergyGrid(40, 8.0), {16, 16});
  return t;
}

DistributionState smooth_state(const EnergyGrid& g) {
  return DistributionState::sample(g, [](double x) { return 0.8 * std::exp(-x) + 0.2 * std::exp(-0.5 * (x - 2) * (x - 2)); });
}

}  // namespace

TEST(Collision, MatchesNaiveReference) {
  int states = 0;
  for (std::size_t n : {8, 12, 16}) {
    const EnergyGrid g(n, 5.0);
    for (const auto& m : {PotentialModel::hard_sphere(), PotentialModel::eta_rational(1.0, 2.0)}) {
      const auto t = build_tensor(m, g, {12, 12});
      for (std::uint64_t seed = 0; seed < 17; ++seed, ++states) {
        const auto st = random_state(g, 100 * n + seed, seed % 3 == 0 ? 10.0 : 1.0);
        const auto ref = naive::collision_rates(st, t);
        const auto r = collision_rates(st, t);
        const auto q = collision(st, t);
        const double sg = max_abs(ref.gain), sl = max_abs(ref.loss), sq = std::max(sg, max_abs(ref.collision));
        for (std::size_t i = 0; i < n; ++i) {
          EXPECT_NEAR(r.gain[i], ref.gain[i], 1e-12 * sg);
          EXPECT_NEAR(r.loss[i], ref.loss[i], 1e-12 * sl);
          EXPECT_NEAR(q[i], ref.collision[i], 1e-12 * sq);
        }
        EXPECT_EQ(gain(st, t), r.gain);
        EXPECT_EQ(loss_rate(st, t), r.loss);
      }
    }
  }
  EXPECT_GE(states, 100);
}

TEST(Collision, ZeroStateAndMismatch) {
  const auto& t = eta2_tensor();
  const auto z = DistributionState::zeros(EnergyGrid(40, 8.0));
  EXPECT_EQ(max_abs(gain(z, t)), 0.0);
  EXPECT_EQ(max_abs(loss_rate(z, t)), 0.0);
  EXPECT_THROW(collision(DistributionState::zeros(EnergyGrid(40, 9.0)), t), DomainError);
}

TEST(Collision, ExactConservation) {
  const auto& t = eta2_tensor();
  const EnergyGrid g(40, 8.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto st = random_state(g, seed, seed % 2 ? 5.0 : 0.5);
    const auto q = collision(st, t);
    double m = 0.0, e = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      m += q[i] * g.weight(i);
      e += g.x(i) * q[i] * g.weight(i);
      scale += (1.0 + g.x(i)) * std::abs(q[i]) * g.weight(i);
    }
    EXPECT_LE(std::abs(m), 1e-13 * scale);
    EXPECT_LE(std::abs(e), 1e-13 * scale);
  }
}

TEST(Collision, DetailedBalanceAtDiscreteEquilibrium) {
  const auto& t = eta2_tensor();
  const auto eq = fit_discrete_equilibrium(EnergyGrid(40, 8.0), 1.0, 1.0);
  ASSERT_TRUE(eq.has_value());
  const auto r = collision_rates(*eq, t);
  const auto q = collision(*eq, t);
  EXPECT_LE(max_abs(q), 1e-10 * sup_norm(*eq));
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(r.gain[i], eq->f[i] * r.loss[i], 1e-10 * r.gain[i]);
}

TEST(Collision, LossAndIntegralBounds) {
  const EnergyGrid g(40, 8.0);
  const auto hs = build_tensor(PotentialModel::hard_sphere(), g, {8, 8});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto st = random_state(g, seed, seed % 2 ? 20.0 : 1.0);
    for (const auto& [tensor, b0] : {std::pair{&eta2_tensor(), 1.0}, std::pair{&hs, 0.5}}) {
      const auto r = collision_rates(st, *tensor);
      const auto bound = loss_bound(st, b0);
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(r.loss[i], bound[i] * (1.0 + 1e-6));
      EXPECT_LE(collision_integral(st, r), collision_integral_bound(st, b0) * (1.0 + 1e-6));
    }
  }
}

TEST(SuggestDt, Definition) {
  const auto& t = eta2_tensor();
  const EnergyGrid g(40, 8.0);
  EXPECT_EQ(suggest_dt(DistributionState::zeros(g), t, 0.5, 3.0), 3.0);
  const auto st = random_state(g, 4);
  const double dt = suggest_dt(st, t, 0.5, 3.0);
  EXPECT_NEAR(dt * max_loss(loss_rate(st, t)), 0.5, 1e-15);
  // L is quadratic in f once f >> 1
  const auto big = random_state(g, 4, 1e4), bigger = random_state(g, 4, 2e4);
  const double ratio = suggest_dt(big, t, 0.5, 3.0) / suggest_dt(bigger, t, 0.5, 3.0);
  EXPECT_GT(ratio, 3.9);
  EXPECT_LE(ratio, 4.0 + 1e-9);
}

TEST(StepEuler, MatchesCollisionAndConserves) {
  const auto& t = eta2_tensor();
  const auto st = smooth_state(EnergyGrid(40, 8.0));
  const double dt = 1e-3;
  const auto res = step_euler(st, t, dt);
  const auto q = collision(st, t);
  EXPECT_EQ(res.clipped_mass, 0.0);
  EXPECT_FALSE(res.cfl_exceeded);
  EXPECT_DOUBLE_EQ(res.state.t, st.t + dt);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR((res.state.f[i] - st.f[i]) / dt, q[i], 1e-9 * max_abs(q));
  EXPECT_NEAR(moment(res.state, 0.0), moment(st, 0.0), 1e-13 * moment(st, 0.0));
  EXPECT_NEAR(moment(res.state, 1.0), moment(st, 1.0), 1e-13 * moment(st, 1.0));
}

TEST(StepEuler, ClipsAndFlagsLargeSteps) {
  const auto& t = eta2_tensor();
  const auto st = random_state(EnergyGrid(40, 8.0), 9, 3.0);
  const auto res = step_euler(st, t, 20.0 * suggest_dt(st, t, 1.0, 1.0));
  EXPECT_TRUE(res.cfl_exceeded);
  EXPECT_GT(res.clipped_mass, 0.0);
  for (double v : res.state.f) EXPECT_GE(v, 0.0);
}

TEST(StepEuler, NonFiniteRatesAbort) {
  const auto st = DistributionState::zeros(EnergyGrid(4, 1.0));
  CollisionRates r{{0.0, INFINITY, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
  EXPECT_THROW(step_euler(st, r, 0.1), NumericError);
  EXPECT_THROW(step_duhamel(st, r, 0.1), NumericError);
}

TEST(StepDuhamel, PositiveForAnyStep) {
  const auto& t = eta2_tensor();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto st = random_state(EnergyGrid(40, 8.0), seed, 10.0);
    for (double dt : {1e-9, 1e-2, 1.0, 1e6}) {
      const auto res = step_duhamel(st, t, dt);
      for (double v : res.state.f) {
        EXPECT_GE(v, 0.0);
        EXPECT_TRUE(std::isfinite(v));
      }
    }
  }
}

TEST(StepDuhamel, EquilibriumAndZeroFixed) {
  const auto& t = eta2_tensor();
  const auto eq = *fit_discrete_equilibrium(EnergyGrid(40, 8.0), 1.0, 1.0);
  for (const auto& st : {eq, DistributionState::zeros(EnergyGrid(40, 8.0))}) {
    const auto d = step_duhamel(st, t, 0.1);
    const auto e = step_euler(st, t, 0.1);
    for (std::size_t i = 0; i < st.size(); ++i) {
      EXPECT_NEAR(d.state.f[i], st.f[i], 1e-10 * std::max(1.0, sup_norm(st)));
      EXPECT_NEAR(e.state.f[i], st.f[i], 1e-10 * std::max(1.0, sup_norm(st)));
    }
  }
}

TEST(StepDuhamel, AgreesWithEulerToSecondOrder) {
  const auto& t = eta2_tensor();
  const auto st = smooth_state(EnergyGrid(40, 8.0));
  auto gap = [&](double dt) {
    const auto a = step_duhamel(st, t, dt).state, b = step_euler(st, t, dt).state;
    double m = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) m = std::max(m, std::abs(a.f[i] - b.f[i]));
    return m;
  };
  const double r = gap(1e-3) / gap(5e-4);
  EXPECT_NEAR(r, 4.0, 0.1);
}

TEST(Run, EulerIsFirstOrder) {
  const auto& t = eta2_tensor();
  const auto st = smooth_state(EnergyGrid(40, 8.0));
  auto final_state = [&](double dt) {
    SolverConfig c;
    c.scheme = Scheme::Euler;
    c.dt = dt;
    c.t_end = 0.2;
    c.sample_every = 0.2;
    c.track_dissipation = false;
    return run(st, t, c).samples.back().state;
  };
  const auto ref = final_state(0.2 / 256);
  auto err = [&](double dt) {
    const auto s = final_state(dt);
    double m = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) m = std::max(m, std::abs(s.f[i] - ref.f[i]));
    return m;
  };
  const double e1 = err(0.2 / 8), e2 = err(0.2 / 16), e3 = err(0.2 / 32);
  EXPECT_NEAR(e1 / e2, 2.0, 0.35);
  EXPECT_NEAR(e2 / e3, 2.0, 0.35);
}

TEST(Run, SamplesAndConservation) {
  const auto& t = eta2_tensor();
  const auto st = smooth_state(EnergyGrid(40, 8.0));
  SolverConfig c;
  c.scheme = Scheme::Euler;
  c.t_end = 1.0;
  c.sample_every = 0.3;
  const auto traj = run(st, t, c);
  ASSERT_EQ(traj.samples.size(), 5u);
  const std::vector<double> times{0.0, 0.3, 0.6, 0.9, 1.0};
  for (std::size_t m = 0; m < times.size(); ++m) EXPECT_EQ(traj.samples[m].diag.t, times[m]);
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(s.diag.N, traj.samples[0].diag.N, 1e-12 * traj.samples[0].diag.N);
    EXPECT_NEAR(s.diag.E, traj.samples[0].diag.E, 1e-12 * traj.samples[0].diag.E);
    EXPECT_GE(s.diag.S, traj.samples[0].diag.S);
  }
  EXPECT_EQ(traj.clipped_mass, 0.0);
  EXPECT_EQ(traj.cfl_warnings, 0u);
  EXPECT_EQ(traj.grid_hash, st.grid.hash());
  EXPECT_EQ(traj.tensor_hash, t.hash());
  EXPECT_GT(traj.samples.back().dissipation_integral, 0.0);
  const auto again = run(st, t, c);
  EXPECT_EQ(again.samples.back().state.f, traj.samples.back().state.f);
  EXPECT_EQ(again.steps, traj.steps);
}

TEST(Run, EquilibriumStaysPut) {
  const auto& t = eta2_tensor();
  const auto eq = *fit_discrete_equilibrium(EnergyGrid(40, 8.0), 1.0, 1.0);
  SolverConfig c;
  c.t_end = 0.5;
  const auto traj = run(eq, t, c, {}, &eq);
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(s.diag.S, traj.samples[0].diag.S, 1e-8 * traj.samples[0].diag.S);
    EXPECT_NEAR(s.diag.M_minus_half, traj.samples[0].diag.M_minus_half, 1e-8);
    EXPECT_LT(s.diag.L1_to_eq, 1e-8);
  }
}

TEST(Run, RejectsBadConfig) {
  const auto& t = eta2_tensor();
  const auto st = smooth_state(EnergyGrid(40, 8.0));
  SolverConfig c;
  c.t_end = -1.0;
  EXPECT_THROW(run(st, t, c), DomainError);
  c = {};
  c.cfl_safety = 2.0;
  EXPECT_THROW(run(st, t, c), DomainError);
  EXPECT_EQ(sample_times(0.25, 1.0), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(sample_times(0.1, 0.35).back(), 0.35);
}
