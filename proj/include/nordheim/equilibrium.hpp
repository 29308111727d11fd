#pragma once

// Bose-Einstein equilibria 1 / (A e^{x/kappa} - 1) with prescribed mass and
// energy, plus a condensate of mass n0 when the temperature is subcritical.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nordheim/errors.hpp"
#include "nordheim/grid.hpp"
#include "nordheim/measure.hpp"
#include "nordheim/specfun.hpp"

namespace nordheim {

inline constexpr double kGamma32 = 0.88622692545275801365;  // sqrt(pi) / 2
inline constexpr double kGamma52 = 1.32934038817913702047;  // 3 sqrt(pi) / 4

struct BoseEinsteinEquilibrium {
  double A = 1.0;
  double log_A = 0.0;
  double kappa = 1.0;
  double n0 = 0.0;
  double N_target = 0.0, E_target = 0.0;
  double ratio = 0.0;           // temperature_ratio(N, E)
  double n0_from_ratio = 0.0;   // (1 - ratio^{3/5}) N on the condensate branch
  double residual_N = 0.0, residual_E = 0.0;  // relative
  int iterations = 0;

  bool condensed() const { return log_A == 0.0; }
};

/// E / N^{5/3} of the regular equilibrium at fugacity A = e^{log_A}.
inline double energy_mass_shape(double log_A) {
  return kGamma52 * bose_g_log(2.5, log_A) / std::pow(kGamma32 * bose_g_log(1.5, log_A), 5.0 / 3.0);
}

inline double critical_energy_shape() { return energy_mass_shape(0.0); }

inline BoseEinsteinEquilibrium solve_equilibrium(double N, double E) {
  if (!(N > 0.0) || !(E > 0.0) || !std::isfinite(N) || !std::isfinite(E))
    throw DomainError("solve_equilibrium: N and E must be positive and finite");
  BoseEinsteinEquilibrium eq;
  eq.N_target = N;
  eq.E_target = E;
  eq.ratio = temperature_ratio(N, E);
  if (eq.ratio <= 1.0) {
    eq.A = 1.0;
    eq.log_A = 0.0;
    eq.kappa = std::pow(E / (kGamma52 * zeta(2.5)), 0.4);
    eq.n0 = std::max(N - std::pow(eq.kappa, 1.5) * kGamma32 * zeta(1.5), 0.0);
    eq.n0_from_ratio = (1.0 - std::pow(eq.ratio, 0.6)) * N;
  } else {
    const double target = E / std::pow(N, 5.0 / 3.0);
    double lo = 0.0, hi = 1.0;
    while (energy_mass_shape(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e4) throw NumericError("solve_equilibrium: fugacity bracket failed", 0.0);
    }
    int it = 0;
    for (; it < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (energy_mass_shape(mid) < target ? lo : hi) = mid;
    }
    eq.iterations = it;
    eq.log_A = 0.5 * (lo + hi);
    eq.A = std::exp(eq.log_A);
    eq.kappa = std::pow(N / (kGamma32 * bose_g_log(1.5, eq.log_A)), 2.0 / 3.0);
    eq.n0 = 0.0;
    eq.n0_from_ratio = 0.0;
  }
  const double g32 = bose_g_log(1.5, eq.log_A), g52 = bose_g_log(2.5, eq.log_A);
  const double Nr = std::pow(eq.kappa, 1.5) * kGamma32 * g32 + eq.n0;
  const double Er = std::pow(eq.kappa, 2.5) * kGamma52 * g52;
  eq.residual_N = std::abs(Nr - N) / N;
  eq.residual_E = std::abs(Er - E) / E;
  if (!(eq.residual_N <= 1e-10 && eq.residual_E <= 1e-10))
    throw NumericError("solve_equilibrium: residuals N=" + format_double(eq.residual_N) +
                           " E=" + format_double(eq.residual_E),
                       0.0);
  return eq;
}

/// Regular part 1 / (A e^{x/kappa} - 1); the condensate is never a density value.
inline double equilibrium_density(const BoseEinsteinEquilibrium& eq, double x) {
  if (!(x > 0.0)) throw DomainError("equilibrium_density: x must be positive");
  return 1.0 / std::expm1(eq.log_A + x / eq.kappa);
}

struct DiscretizedEquilibrium {
  DistributionState state;
  double N = 0.0, E = 0.0;
  double drift_N = 0.0, drift_E = 0.0;  // relative to the regular-part targets
};

inline DiscretizedEquilibrium discretize_equilibrium(const BoseEinsteinEquilibrium& eq, const EnergyGrid& grid) {
  DiscretizedEquilibrium d{DistributionState::sample(grid, [&](double x) { return equilibrium_density(eq, x); })};
  d.N = moment(d.state, 0.0);
  d.E = moment(d.state, 1.0);
  const double Nreg = eq.N_target - eq.n0;
  d.drift_N = Nreg > 0.0 ? (d.N - Nreg) / Nreg : 0.0;
  d.drift_E = (d.E - eq.E_target) / eq.E_target;
  return d;
}

/// Grid Bose-Einstein state 1 / (e^{mu + x / kappa} - 1) whose discrete mass
/// and energy equal (N, E). mu may be slightly negative (mu + x_0 / kappa > 0),
/// which lets the grid hold the mass a continuum condensate would carry.
/// Returns nullopt when the Newton iteration fails.
inline std::optional<DistributionState> fit_discrete_equilibrium(const EnergyGrid& grid, double N, double E) {
  if (!(N > 0.0) || !(E > 0.0)) throw DomainError("fit_discrete_equilibrium: N and E must be positive");
  const auto eq = solve_equilibrium(N, E);
  double mu = eq.condensed() ? 0.0 : eq.log_A;
  double beta = 1.0 / eq.kappa;
  auto residual = [&](double m, double b, double& r1, double& r2, double& j11, double& j12, double& j22) {
    r1 = -N;
    r2 = -E;
    j11 = j12 = j22 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.x(i), w = grid.weight(i);
      const double g = 1.0 / std::expm1(m + b * x);
      const double d = g * (1.0 + g);
      r1 += w * g;
      r2 += w * x * g;
      j11 -= w * d;
      j12 -= w * x * d;
      j22 -= w * x * x * d;
    }
  };
  const double x0 = grid.x(0);
  if (mu + beta * x0 <= 0.0) mu = -0.5 * beta * x0;
  double r1, r2, j11, j12, j22;
  residual(mu, beta, r1, r2, j11, j12, j22);
  for (int it = 0; it < 200; ++it) {
    const double norm = std::hypot(r1 / N, r2 / E);
    if (norm < 1e-14) break;
    const double det = j11 * j22 - j12 * j12;
    if (!(std::abs(det) > 0.0)) return std::nullopt;
    const double dm = -(j22 * r1 - j12 * r2) / det;
    const double db = -(-j12 * r1 + j11 * r2) / det;
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half, step *= 0.5) {
      const double m = mu + step * dm, b = beta + step * db;
      if (!(b > 0.0) || !(m + b * x0 > 0.0)) continue;
      double s1, s2, k11, k12, k22;
      residual(m, b, s1, s2, k11, k12, k22);
      if (std::hypot(s1 / N, s2 / E) < norm) {
        mu = m;
        beta = b;
        r1 = s1, r2 = s2, j11 = k11, j12 = k12, j22 = k22;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(std::hypot(r1 / N, r2 / E) < 1e-10)) return std::nullopt;
  return DistributionState::sample(grid, [&](double x) { return 1.0 / std::expm1(mu + beta * x); });
}

}  // namespace nordheim
