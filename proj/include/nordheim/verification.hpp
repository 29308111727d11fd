#pragma once

// Monitors that test trajectories against the explicit bounds of the theory,
// and the paired-run continuous dependence experiment.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nordheim/measure.hpp"
#include "nordheim/potentials.hpp"
#include "nordheim/solver.hpp"

namespace nordheim {

struct BoundSample {
  double t = 0.0;
  double observed = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - observed
  std::string label;    // sub-series, e.g. "eps=0.01"
};

struct BoundReport {
  std::string name;
  bool applicable = true;  // false when the model misses the hypothesis
  bool pass = true;
  double tolerance = 0.0;
  std::vector<BoundSample> samples;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<std::string> notes;

  void add(double t, double observed, double bound, std::string label = {}) {
    const bool ok = observed <= bound * (1.0 + tolerance) || (std::isinf(bound) && bound > 0.0);
    if (!ok) pass = false;
    samples.push_back({t, observed, bound, bound - observed, std::move(label)});
  }
  void constant(std::string key, double v) { constants.emplace_back(std::move(key), v); }
  double constant(const std::string& key) const {
    for (const auto& [k, v] : constants)
      if (k == key) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

// JSON has no infinity; write +-inf and nan as strings.
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double json_to_double(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["applicable"] = r.applicable;
  j["pass"] = r.pass;
  j["tolerance"] = r.tolerance;
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : r.constants) c[k] = detail::json_number(v);
  j["constants"] = c;
  j["notes"] = r.notes;
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : r.samples) {
    nlohmann::json e{{"t", x.t},
                     {"observed", detail::json_number(x.observed)},
                     {"bound", detail::json_number(x.bound)},
                     {"margin", detail::json_number(x.margin)}};
    if (!x.label.empty()) e["label"] = x.label;
    s.push_back(std::move(e));
  }
  j["samples"] = s;
  return j;
}

// ---------------------------------------------------------------------------
// constants

/// c = 8^{2+eta} b0^2 (1 + q1) N^2.
inline double non_condensation_rate(double b0, double eta, double q1, double N) {
  return std::pow(8.0, 2.0 + eta) * b0 * b0 * (1.0 + q1) * N * N;
}

/// a = 8^2 b0^2 N^{3/2+p} E^{1/2-p} + 8^{2+eta} b0^2 N^3.
inline double negative_moment_a(double b0, double eta, double N, double E, double p) {
  return 64.0 * b0 * b0 * std::pow(N, 1.5 + p) * std::pow(E, 0.5 - p) + std::pow(8.0, 2.0 + eta) * b0 * b0 * N * N * N;
}

/// b = 8^{3+eta} b0^2 N^2 (1 + q1).
inline double negative_moment_b(double b0, double eta, double q1, double N) {
  return std::pow(8.0, 3.0 + eta) * b0 * b0 * N * N * (1.0 + q1);
}

/// Finite-eps remainder (4 sqrt2 b0^2 N^2 sqrt(eps) + 8^{1+eta} b0^2 eps N^2) t e^{ct}.
inline double non_condensation_slack(double b0, double eta, double N, double c, double eps, double t) {
  if (t == 0.0) return 0.0;
  const double rate = 4.0 * std::numbers::sqrt2 * b0 * b0 * N * N * std::sqrt(eps) +
                      std::pow(8.0, 1.0 + eta) * b0 * b0 * eps * N * N;
  return rate * t * std::exp(c * t);
}

namespace detail {

inline void require_samples(const Trajectory& traj) {
  if (traj.samples.empty()) throw DomainError("trajectory has no samples");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// monitors

/// N and E stay at their initial values: relative drift <= rel_tol, or
/// rel_tol * t when the trajectory used the Duhamel step.
inline BoundReport check_conservation(const Trajectory& traj, double rel_tol = 1e-10,
                                      double duhamel_rate = 1e-6) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "conservation";
  const bool per_time = traj.config.scheme == Scheme::Duhamel;
  const auto& d0 = traj.samples.front().diag;
  r.constant("N0", d0.N);
  r.constant("E0", d0.E);
  r.constant(per_time ? "rel_tol_per_unit_time" : "rel_tol", per_time ? duhamel_rate : rel_tol);
  for (const auto& s : traj.samples) {
    const double tol = per_time ? duhamel_rate * s.diag.t : rel_tol;
    const double dn = d0.N > 0.0 ? std::abs(s.diag.N - d0.N) / d0.N : std::abs(s.diag.N);
    const double de = d0.E > 0.0 ? std::abs(s.diag.E - d0.E) / d0.E : std::abs(s.diag.E);
    r.add(s.diag.t, dn, tol, "N");
    r.add(s.diag.t, de, tol, "E");
  }
  return r;
}

/// I_eps(t) <= e^{ct} I_eps(0) + slack(eps, t) for each eps, and I_eps(t) is
/// nondecreasing in eps at every sample.
inline BoundReport check_non_condensation(const Trajectory& traj, const PotentialModel& model,
                                          std::vector<double> eps_list) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "non_condensation";
  if (!model.claims_balanced()) {
    r.applicable = false;
    r.notes.push_back("potential is not in the balanced class");
    return r;
  }
  std::sort(eps_list.begin(), eps_list.end());
  const double N = traj.samples.front().diag.N;
  const double c = non_condensation_rate(model.b0(), model.eta(), model.q1(), N);
  r.tolerance = 1e-12;
  r.constant("b0", model.b0());
  r.constant("eta", model.eta());
  r.constant("q1", model.q1());
  r.constant("N", N);
  r.constant("c", c);
  std::vector<double> I0;
  for (double e : eps_list) I0.push_back(condensate_indicator(traj.samples.front().state, e));
  bool ordered = true;
  for (const auto& s : traj.samples) {
    const double t = s.diag.t;
    double prev = 0.0;
    for (std::size_t q = 0; q < eps_list.size(); ++q) {
      const double e = eps_list[q];
      const double I = condensate_indicator(s.state, e);
      const double growth = t == 0.0 ? 1.0 : std::exp(c * t);
      const double carried = I0[q] > 0.0 ? growth * I0[q] : 0.0;  // avoid 0 * inf
      r.add(t, I, carried + non_condensation_slack(model.b0(), model.eta(), N, c, e, t),
            "eps=" + format_double(e));
      if (q > 0 && I < prev * (1.0 - 1e-12)) ordered = false;
      prev = I;
    }
  }
  if (!ordered) {
    r.pass = false;
    r.notes.push_back("I_eps is not monotone in eps at some sample");
  } else {
    r.notes.push_back("I_eps nondecreasing in eps at every sample");
  }
  return r;
}

/// M_{-p}(t) <= (a t + M_{-p}(0)) e^{bt}, for 0 < p <= 1/2 and eta >= 1 + p.
inline BoundReport check_negative_moment(const Trajectory& traj, const PotentialModel& model, double p = 0.5) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "negative_moment";
  r.tolerance = 1e-6;
  if (!model.claims_balanced() || !(p > 0.0 && p <= 0.5) || model.eta() < 1.0 + p) {
    r.applicable = false;
    r.notes.push_back("hypothesis fails: needs a balanced potential, 0 < p <= 1/2 and eta >= 1 + p");
    return r;
  }
  const auto& d0 = traj.samples.front().diag;
  const double a = negative_moment_a(model.b0(), model.eta(), d0.N, d0.E, p);
  const double b = negative_moment_b(model.b0(), model.eta(), model.q1(), d0.N);
  r.constant("p", p);
  r.constant("b0", model.b0());
  r.constant("eta", model.eta());
  r.constant("q1", model.q1());
  r.constant("N", d0.N);
  r.constant("E", d0.E);
  r.constant("a", a);
  r.constant("b", b);
  const double m0 = moment(traj.samples.front().state, -p);
  for (const auto& s : traj.samples) {
    const double t = s.diag.t;
    const double growth = t == 0.0 ? 1.0 : std::exp(b * t);
    r.add(t, moment(s.state, -p), (a * t + m0) * growth);
  }
  return r;
}

/// sup f(t) <= (1 + sup f(0)) exp(8 b0^2 int_0^t M_{-1/2}^2), trapezoid in time.
inline BoundReport check_linf(const Trajectory& traj, double b0) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "linf";
  r.tolerance = 1e-6;
  r.constant("b0", b0);
  const double f0 = traj.samples.front().diag.sup_f;
  double integral = 0.0;
  for (std::size_t m = 0; m < traj.samples.size(); ++m) {
    const auto& d = traj.samples[m].diag;
    if (m > 0) {
      const auto& p = traj.samples[m - 1].diag;
      integral += 0.5 * (d.t - p.t) * (p.M_minus_half * p.M_minus_half + d.M_minus_half * d.M_minus_half);
    }
    r.add(d.t, d.sup_f, (1.0 + f0) * std::exp(8.0 * b0 * b0 * integral));
  }
  return r;
}

/// S nondecreasing between samples (relative tolerance), with the entropy
/// balance residual |S(t) - S(0) - int D| and C = max residual / (dt t) reported.
inline BoundReport check_entropy(const Trajectory& traj, double rel_tol = 1e-9) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "entropy";
  r.tolerance = 0.0;
  const double S0 = traj.samples.front().diag.S;
  double worst_residual = 0.0, C = 0.0;
  for (std::size_t m = 0; m < traj.samples.size(); ++m) {
    const auto& s = traj.samples[m];
    if (m > 0) {
      const double prev = traj.samples[m - 1].diag.S;
      const double drop = prev != 0.0 ? (prev - s.diag.S) / std::abs(prev) : 0.0;
      r.add(s.diag.t, drop, rel_tol, "relative_drop");
    }
    const double res = std::abs(s.diag.S - S0 - s.dissipation_integral);
    worst_residual = std::max(worst_residual, res);
    if (s.diag.t > 0.0 && traj.max_dt > 0.0) C = std::max(C, res / (traj.max_dt * s.diag.t));
  }
  const double step_drop = traj.worst_step_entropy_drop;
  if (step_drop > rel_tol) {
    r.pass = false;
    r.notes.push_back("entropy decreased within a step by " + format_double(step_drop));
  }
  r.constant("worst_step_relative_drop", step_drop);
  r.constant("max_balance_residual", worst_residual);
  r.constant("C", C);
  r.constant("max_dt", traj.max_dt);
  if (!traj.config.track_dissipation) r.notes.push_back("dissipation not tracked; balance residual meaningless");
  return r;
}

/// l1_distance to the equilibrium falls: final below initial, and after the
/// first tenth of the run each sample sits below its predecessor up to tol * d(0).
inline BoundReport check_convergence_to_equilibrium(const Trajectory& traj, const DistributionState& eq,
                                                    const PotentialModel* model = nullptr, double tol = 1e-3) {
  detail::require_samples(traj);
  BoundReport r;
  r.name = "convergence_to_equilibrium";
  if (model && !has_positive_monotone_lower_bound(*model)) {
    r.applicable = false;
    r.notes.push_back("potential lacks a positive lower bound on (0, inf)");
    return r;
  }
  const double d0 = l1_distance(traj.samples.front().state, eq);
  const double e_eq = seminorm_1(eq);
  const double t_end = traj.samples.back().diag.t;
  double prev = d0, worst_e = 0.0;
  bool monotone = true;
  for (const auto& s : traj.samples) {
    const double d = l1_distance(s.state, eq);
    worst_e = std::max(worst_e, std::abs(seminorm_1(s.state) - e_eq));
    if (s.diag.t > 0.1 * t_end && d > prev + tol * d0) monotone = false;
    prev = d;
    r.samples.push_back({s.diag.t, d, d0, d0 - d, "l1_distance"});
  }
  const double df = r.samples.back().observed;
  r.pass = monotone && (d0 == 0.0 ? df <= 1e-12 : df < d0);
  r.constant("initial_distance", d0);
  r.constant("final_distance", df);
  r.constant("max_energy_gap", worst_e);
  r.notes.push_back(monotone ? "distance monotone after burn-in" : "distance rose after burn-in");
  return r;
}

// ---------------------------------------------------------------------------
// descriptive monitors (no pass/fail: the constants are not effective)

/// sup over t > 0 of M_s(t) (1 + 1/t)^{-(s-2)}, for s > 2.
inline BoundReport describe_moment_production(const Trajectory& traj, double s_order) {
  BoundReport r;
  r.name = "moment_production";
  r.applicable = false;
  double sup = 0.0;
  for (const auto& s : traj.samples) {
    if (s.diag.t <= 0.0) continue;
    const double v = moment(s.state, s_order) * std::pow(1.0 + 1.0 / s.diag.t, -(s_order - 2.0));
    sup = std::max(sup, v);
    r.samples.push_back({s.diag.t, v, std::numeric_limits<double>::quiet_NaN(), 0.0, "scaled_moment"});
  }
  r.constant("s", s_order);
  r.constant("sup_scaled_moment", sup);
  r.notes.push_back("descriptive only");
  return r;
}

/// inf of S(t) over t >= t0.
inline BoundReport describe_entropy_floor(const Trajectory& traj, double t0) {
  BoundReport r;
  r.name = "entropy_floor";
  r.applicable = false;
  double inf = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples)
    if (s.diag.t >= t0) inf = std::min(inf, s.diag.S);
  r.constant("t0", t0);
  r.constant("inf_S", inf);
  r.notes.push_back("descriptive only");
  return r;
}

// ---------------------------------------------------------------------------
// continuous dependence

/// Psi(eps) = eps + sqrt(eps) + int_{x > 1/sqrt(eps)} x dF_0.
inline double stability_psi(const DistributionState& f0, double eps) {
  if (eps <= 0.0) return 0.0;
  const double cut = 1.0 / std::sqrt(eps);
  double tail = 0.0;
  for (std::size_t i = 0; i < f0.size(); ++i)
    if (f0.grid.x(i) > cut) tail += f0.grid.x(i) * f0.f[i] * f0.grid.weight(i);
  return eps + std::sqrt(eps) + tail;
}

struct StabilityRun {
  double d0 = 0.0;
  double psi = 0.0;
  double sup_distance = 0.0;
  std::vector<std::pair<double, double>> distance;  // (t, d(t))
};

struct StabilityReport {
  StabilityRun full, halved;
  bool identical_zero = true;  // f0 against itself gives d == 0
  bool monotone = true;        // halved sup distance <= 1.05 * full
  bool pass() const { return identical_zero && monotone; }
};

inline StabilityRun paired_distance(const Trajectory& a, const Trajectory& b, const DistributionState& f0) {
  StabilityRun s;
  const std::size_t m = std::min(a.samples.size(), b.samples.size());
  for (std::size_t q = 0; q < m; ++q) {
    const double d = l1_distance(a.samples[q].state, b.samples[q].state);
    s.distance.emplace_back(a.samples[q].diag.t, d);
    s.sup_distance = std::max(s.sup_distance, d);
  }
  s.d0 = s.distance.empty() ? 0.0 : s.distance.front().second;
  s.psi = stability_psi(f0, s.d0);
  return s;
}

/// Runs f0, g0 and the midpoint perturbation f0 + (g0 - f0)/2, then checks
/// that halving the initial distance does not raise sup d(t) by more than 5%
/// and that f0 against a copy of itself stays at distance zero.
inline StabilityReport stability_experiment(const DistributionState& f0, const DistributionState& g0,
                                            const KernelTensor& tensor, const SolverConfig& config) {
  if (!(f0.grid == g0.grid)) throw DomainError("stability_experiment: grid mismatch");
  std::vector<double> mid(f0.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (f0.f[i] + g0.f[i]);
  const DistributionState h0(f0.grid, std::move(mid));
  SolverConfig cfg = config;
  cfg.track_dissipation = false;
  const Trajectory tf = run(f0, tensor, cfg);
  const Trajectory tf2 = run(f0, tensor, cfg);
  const Trajectory tg = run(g0, tensor, cfg);
  const Trajectory th = run(h0, tensor, cfg);
  StabilityReport rep;
  rep.full = paired_distance(tf, tg, f0);
  rep.halved = paired_distance(tf, th, f0);
  for (const auto& [t, d] : paired_distance(tf, tf2, f0).distance)
    if (d != 0.0) rep.identical_zero = false;
  rep.monotone = rep.halved.sup_distance <= 1.05 * rep.full.sup_distance;
  return rep;
}

inline nlohmann::json to_json(const StabilityReport& r) {
  auto run_json = [](const StabilityRun& s) {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& [t, v] : s.distance) d.push_back({t, v});
    return nlohmann::json{{"d0", s.d0}, {"psi", s.psi}, {"sup_distance", s.sup_distance}, {"distance", d}};
  };
  return {{"name", "stability"},
          {"pass", r.pass()},
          {"identical_zero", r.identical_zero},
          {"monotone", r.monotone},
          {"full", run_json(r.full)},
          {"halved", run_json(r.halved)}};
}

}  // namespace nordheim
