#pragma once

// Discrete collision operator Q = Q+ - f L on the grid and two explicit
// time integrators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "nordheim/collision_kernel.hpp"
#include "nordheim/errors.hpp"
#include "nordheim/grid.hpp"
#include "nordheim/measure.hpp"
#include "nordheim/parallel.hpp"

namespace nordheim {

struct CollisionRates {
  std::vector<double> gain;  // Q+_i
  std::vector<double> loss;  // L_i, with Q-_i = f_i L_i
};

/// Q+_i = x_i^{-1/2} h^2 sum_{j,k} Lambda f_j f_k (1 + f_i + f_i*),
/// L_i = x_i^{-1/2} h^2 sum_{j,k} Lambda f_i* (1 + f_j + f_k), i* = j + k - i.
inline CollisionRates collision_rates(const DistributionState& st, const KernelTensor& t) {
  require_same_grid(st, t);
  const std::size_t n = st.size();
  const double* f = st.f.data();
  const double h2 = st.grid.h() * st.grid.h();
  CollisionRates r{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  parallel_for(n, [&](std::size_t i) {
    double gain = 0.0, loss = 0.0;
    const double fi = f[i];
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k_lo = i > j ? i - j : 0;
      const std::size_t k_hi = std::min(n - 1, n - 1 + i - j);
      const double* lam = t.row(i, j);
      const double fj = f[j];
      const double* fc = f + (j + k_lo - i);  // f_{i*} for k = k_lo
      double g = 0.0, l = 0.0;
      for (std::size_t k = k_lo; k <= k_hi; ++k, ++fc) {
        const double w = lam[k];
        g += w * f[k] * (1.0 + fi + *fc);
        l += w * *fc * (1.0 + fj + f[k]);
      }
      gain += fj * g;
      loss += l;
    }
    const double scale = h2 / st.grid.sqrt_x(i);
    r.gain[i] = scale * gain;
    r.loss[i] = scale * loss;
  });
  return r;
}

inline std::vector<double> gain(const DistributionState& st, const KernelTensor& t) {
  return collision_rates(st, t).gain;
}

inline std::vector<double> loss_rate(const DistributionState& st, const KernelTensor& t) {
  return collision_rates(st, t).loss;
}

inline std::vector<double> collision(const DistributionState& st, const KernelTensor& t) {
  auto r = collision_rates(st, t);
  std::vector<double> q(st.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = r.gain[i] - st.f[i] * r.loss[i];
  return q;
}

inline double max_loss(const std::vector<double>& L) {
  double m = 0.0;
  for (double v : L) m = std::max(m, v);
  return m;
}

/// Right side of the pointwise loss bound 4 b0^2 (sqrt(x) N + M_{1/2} + 2 M_{-1/2}^2).
inline std::vector<double> loss_bound(const DistributionState& st, double b0) {
  const double N = moment(st, 0.0), Mh = moment(st, 0.5), Mmh = moment(st, -0.5);
  std::vector<double> b(st.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 4.0 * b0 * b0 * (st.grid.sqrt_x(i) * N + Mh + 2.0 * Mmh * Mmh);
  return b;
}

/// sum (Q+_i + f_i L_i) sqrt(x_i) h.
inline double collision_integral(const DistributionState& st, const CollisionRates& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) sum += (r.gain[i] + st.f[i] * r.loss[i]) * st.grid.weight(i);
  return sum;
}

/// 16 b0^2 (M_{1/2} M_{-1/2} + M_{-1/2}^3), the bound on collision_integral.
inline double collision_integral_bound(const DistributionState& st, double b0) {
  const double Mh = moment(st, 0.5), Mmh = moment(st, -0.5);
  return 16.0 * b0 * b0 * (Mh * Mmh + Mmh * Mmh * Mmh);
}

/// cfl_safety / max_i L_i; t_end when every L_i vanishes (free motion).
inline double suggest_dt(const std::vector<double>& L, double cfl_safety, double t_end) {
  const double m = max_loss(L);
  return m > 0.0 ? cfl_safety / m : t_end;
}

inline double suggest_dt(const DistributionState& st, const KernelTensor& t, double cfl_safety, double t_end) {
  return suggest_dt(collision_rates(st, t).loss, cfl_safety, t_end);
}

struct StepResult {
  DistributionState state;
  double clipped_mass = 0.0;  // sum of removed negative parts, weighted by sqrt(x) h
  bool cfl_exceeded = false;  // dt * max L > 1
};

namespace detail {

inline void require_finite(const std::vector<double>& v, double t) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError("non-finite density produced", t);
}

}  // namespace detail

inline StepResult step_euler(const DistributionState& st, const CollisionRates& r, double dt) {
  std::vector<double> f(st.size());
  double clipped = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = st.f[i] + dt * (r.gain[i] - st.f[i] * r.loss[i]);
    if (v < 0.0) {
      clipped -= v * st.grid.weight(i);
      f[i] = 0.0;
    } else {
      f[i] = v;
    }
  }
  detail::require_finite(f, st.t + dt);
  const bool exceeded = dt * max_loss(r.loss) > 1.0;
  return {DistributionState(st.grid, std::move(f), st.t + dt), clipped, exceeded};
}

inline StepResult step_euler(const DistributionState& st, const KernelTensor& t, double dt) {
  return step_euler(st, collision_rates(st, t), dt);
}

/// Frozen-coefficient exponential step f e^{-L dt} + (Q+/L)(1 - e^{-L dt}).
inline StepResult step_duhamel(const DistributionState& st, const CollisionRates& r, double dt) {
  std::vector<double> f(st.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = r.loss[i] * dt;
    if (z < 1e-8) {
      f[i] = st.f[i] * (1.0 - z) + r.gain[i] * dt;
    } else {
      f[i] = st.f[i] * std::exp(-z) + r.gain[i] / r.loss[i] * (-std::expm1(-z));
    }
  }
  detail::require_finite(f, st.t + dt);
  return {DistributionState(st.grid, std::move(f), st.t + dt), 0.0, false};
}

inline StepResult step_duhamel(const DistributionState& st, const KernelTensor& t, double dt) {
  return step_duhamel(st, collision_rates(st, t), dt);
}

// ---------------------------------------------------------------------------

enum class Scheme { Euler, Duhamel };

inline const char* scheme_name(Scheme s) { return s == Scheme::Euler ? "euler" : "duhamel"; }

struct SolverConfig {
  Scheme scheme = Scheme::Duhamel;
  double dt = 0.0;  // 0 selects the automatic step
  double t_end = 1.0;
  double sample_every = 0.1;
  double cfl_safety = 0.5;
  bool track_dissipation = true;  // D at every step, for the entropy balance

  void validate() const {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("SolverConfig: t_end must be positive");
    if (!(sample_every > 0.0)) throw DomainError("SolverConfig: sample_every must be positive");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw DomainError("SolverConfig: dt must be positive or auto");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw DomainError("SolverConfig: cfl_safety must lie in (0, 1]");
  }
};

struct TrajectorySample {
  DiagnosticsRecord diag;
  DistributionState state;
  double dissipation_integral = 0.0;  // step sum of D dt up to this sample
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  SolverConfig config;
  std::uint64_t grid_hash = 0;
  std::uint64_t tensor_hash = 0;
  std::size_t steps = 0;
  double max_dt = 0.0;
  double clipped_mass = 0.0;
  std::size_t cfl_warnings = 0;
  double worst_step_entropy_drop = 0.0;  // max over steps of (S_m - S_{m+1}) / |S_m|, 0 if never
};

/// Sample times k * sample_every below t_end, plus t_end itself.
inline std::vector<double> sample_times(double sample_every, double t_end) {
  std::vector<double> ts{0.0};
  for (std::size_t k = 1;; ++k) {
    // snap k * sample_every to 12 significant digits so 3 * 0.1 reads 0.3
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(k) * sample_every);
    const double t = std::strtod(buf, nullptr);
    if (t >= t_end * (1.0 - 1e-12)) break;
    ts.push_back(t);
  }
  ts.push_back(t_end);
  return ts;
}

inline Trajectory run(const DistributionState& initial, const KernelTensor& tensor, const SolverConfig& config,
                      const DiagnosticsSpec& spec = {}, const DistributionState* eq = nullptr) {
  config.validate();
  require_same_grid(initial, tensor);
  Trajectory traj;
  traj.config = config;
  traj.grid_hash = initial.grid.hash();
  traj.tensor_hash = tensor.hash();
  const auto times = sample_times(config.sample_every, config.t_end);

  DistributionState st = initial;
  st.t = 0.0;
  double dint = 0.0;
  traj.samples.push_back({compute_diagnostics(st, &tensor, spec, eq), st, 0.0});
  double S = traj.samples.back().diag.S;
  for (std::size_t m = 1; m < times.size(); ++m) {
    const double target = times[m];
    while (st.t < target) {
      const CollisionRates r = collision_rates(st, tensor);
      double dt = config.dt > 0.0 ? config.dt : suggest_dt(r.loss, config.cfl_safety, config.t_end);
      bool last = false;
      if (st.t + dt >= target * (1.0 - 1e-14)) {
        dt = target - st.t;
        last = true;
      }
      if (config.track_dissipation) dint += dt * entropy_dissipation(st, tensor);
      StepResult res = config.scheme == Scheme::Euler ? step_euler(st, r, dt) : step_duhamel(st, r, dt);
      if (res.cfl_exceeded) ++traj.cfl_warnings;
      traj.clipped_mass += res.clipped_mass;
      traj.max_dt = std::max(traj.max_dt, dt);
      ++traj.steps;
      st = std::move(res.state);
      if (last) st.t = target;
      const double S_new = entropy(st);
      if (S_new < S && S != 0.0) traj.worst_step_entropy_drop = std::max(traj.worst_step_entropy_drop, (S - S_new) / std::abs(S));
      S = S_new;
    }
    traj.samples.push_back({compute_diagnostics(st, &tensor, spec, eq), st, dint});
  }
  return traj;
}

}  // namespace nordheim
