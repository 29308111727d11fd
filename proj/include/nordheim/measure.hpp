#pragma once

// Discrete functionals of a density on the midpoint grid.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "nordheim/collision_kernel.hpp"
#include "nordheim/errors.hpp"
#include "nordheim/grid.hpp"
#include "nordheim/parallel.hpp"
#include "nordheim/specfun.hpp"

namespace nordheim {

/// M_p = sum x_i^p f_i sqrt(x_i) h; any real p.
inline double moment(const DistributionState& st, double p) {
  const auto& g = st.grid;
  double sum = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) sum += std::pow(g.x(i), p) * st.f[i] * g.weight(i);
  return sum;
}

/// ||F||_k = integral of (1 + x)^k dF.
inline double norm_k(const DistributionState& st, double k) {
  if (!(k >= 0.0)) throw DomainError("norm_k: k must be >= 0");
  const auto& g = st.grid;
  double sum = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) sum += std::pow(1.0 + g.x(i), k) * st.f[i] * g.weight(i);
  return sum;
}

inline double seminorm_1(const DistributionState& st) { return moment(st, 1.0); }

inline double entropy_integrand(double f) {
  if (f <= 0.0) return 0.0;
  return (1.0 + f) * std::log1p(f) - f * std::log(f);
}

/// S = 4 pi sqrt 2 * sum [(1+f) log(1+f) - f log f] sqrt(x_i) h.
inline double entropy(const DistributionState& st) {
  double sum = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) sum += entropy_integrand(st.f[i]) * st.grid.weight(i);
  return 4.0 * std::numbers::pi * std::numbers::sqrt2 * sum;
}

inline void require_same_grid(const DistributionState& st, const KernelTensor& t) {
  if (!t.matches(st.grid)) throw DomainError("state and kernel tensor are on different grids");
}

/// Floor applied to f inside logarithms of the dissipation only.
inline constexpr double kLogFloor = 1e-300;

/// D = pi sqrt 2 h^3 sum Lambda (a - b) log(a / b) with a = f_j f_k (1+f_i)(1+f_i*),
/// b = f_i f_i* (1+f_j)(1+f_k); log(a/b) is formed from log(f/(1+f)) with f
/// floored at kLogFloor, and every term is nonnegative.
inline double entropy_dissipation(const DistributionState& st, const KernelTensor& t) {
  require_same_grid(st, t);
  const std::size_t n = st.size();
  const auto& f = st.f;
  std::vector<double> lg(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::max(f[i], kLogFloor);
    lg[i] = std::log(v) - std::log1p(v);
  }
  std::vector<double> partial(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k_lo = i > j ? i - j : 0;
      const std::size_t k_hi = std::min(n - 1, n - 1 + i - j);
      const double* lam = t.row(i, j);
      for (std::size_t k = k_lo; k <= k_hi; ++k) {
        const std::size_t c = j + k - i;
        const double a = f[j] * f[k] * (1.0 + f[i] + f[c]);
        const double b = f[i] * f[c] * (1.0 + f[j] + f[k]);
        const double term = lam[k] * (a - b) * ((lg[j] + lg[k]) - (lg[i] + lg[c]));
        acc += std::max(term, 0.0);
      }
    }
    partial[i] = acc;
  });
  double sum = 0.0;
  for (double v : partial) sum += v;
  const double h = st.grid.h();
  return std::numbers::pi * std::numbers::sqrt2 * h * h * h * sum;
}

/// I_eps = sum (1 - x_i / eps)_+^2 f_i sqrt(x_i) h.
inline double condensate_indicator(const DistributionState& st, double eps) {
  if (!(eps > 0.0)) throw DomainError("condensate_indicator: eps must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const double w = 1.0 - st.grid.x(i) / eps;
    if (w > 0.0) sum += w * w * st.f[i] * st.grid.weight(i);
  }
  return sum;
}

/// Kinetic temperature over critical temperature for mass N and energy E.
inline double temperature_ratio(double N, double E) {
  if (!(N > 0.0) || !(E > 0.0)) throw DomainError("temperature_ratio: N and E must be positive");
  static const double z32 = zeta(1.5), z52 = zeta(2.5);
  return E / (3.0 * std::pow(N, 5.0 / 3.0)) * std::cbrt(2.0 * std::numbers::pi) * std::pow(z32, 5.0 / 3.0) / z52;
}

/// sum (1 + x_i) |f_i - g_i| sqrt(x_i) h.
inline double l1_distance(const DistributionState& a, const DistributionState& b) {
  if (!(a.grid == b.grid)) throw DomainError("l1_distance: grid mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (1.0 + a.grid.x(i)) * std::abs(a.f[i] - b.f[i]) * a.grid.weight(i);
  return sum;
}

inline double sup_norm(const DistributionState& st) {
  double m = 0.0;
  for (double v : st.f) m = std::max(m, v);
  return m;
}

/// Mass carried by the top tenth of the grid, a truncation warning signal.
inline double tail_mass(const DistributionState& st) {
  const std::size_t start = st.size() - std::max<std::size_t>(1, st.size() / 10);
  double sum = 0.0;
  for (std::size_t i = start; i < st.size(); ++i) sum += st.f[i] * st.grid.weight(i);
  return sum;
}

struct DiagnosticsSpec {
  std::vector<double> eps_list{1e-2, 1e-3};
  std::vector<double> p_list{0.5};
};

struct DiagnosticsRecord {
  double t = 0.0;
  double N = 0.0, E = 0.0;
  double M_half = 0.0, M_minus_half = 0.0;
  std::vector<std::pair<double, double>> M_p;     // (p, M_{-p})
  double S = 0.0, D = 0.0;
  std::vector<std::pair<double, double>> I_eps;   // (eps, I_eps)
  double sup_f = 0.0;
  double L1_to_eq = 0.0;
  double tail = 0.0;
};

/// Collects every diagnostic; D needs the tensor and L1_to_eq the reference state.
inline DiagnosticsRecord compute_diagnostics(const DistributionState& st, const KernelTensor* tensor,
                                             const DiagnosticsSpec& spec, const DistributionState* eq) {
  DiagnosticsRecord r;
  r.t = st.t;
  r.N = moment(st, 0.0);
  r.E = moment(st, 1.0);
  r.M_half = moment(st, 0.5);
  r.M_minus_half = moment(st, -0.5);
  for (double p : spec.p_list) r.M_p.emplace_back(p, moment(st, -p));
  r.S = entropy(st);
  r.D = tensor ? entropy_dissipation(st, *tensor) : 0.0;
  for (double e : spec.eps_list) r.I_eps.emplace_back(e, condensate_indicator(st, e));
  r.sup_f = sup_norm(st);
  r.L1_to_eq = eq ? l1_distance(st, *eq) : 0.0;
  r.tail = tail_mass(st);
  return r;
}

}  // namespace nordheim
