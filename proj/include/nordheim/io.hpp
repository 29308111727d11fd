#pragma once

// Run directories: config.echo, diagnostics.csv, state_t<t>.csv snapshots,
// trajectory.json and report.json; plus the run and verify pipelines.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nordheim/config.hpp"
#include "nordheim/equilibrium.hpp"
#include "nordheim/measure.hpp"
#include "nordheim/solver.hpp"
#include "nordheim/verification.hpp"

namespace nordheim {

namespace fs = std::filesystem;

inline std::vector<std::string> diagnostics_columns(const std::vector<double>& eps_list) {
  std::vector<std::string> c{"t", "N", "E", "M_half", "M_minus_half", "S", "D"};
  for (double e : eps_list) c.push_back("I_eps_" + format_double(e));
  c.push_back("sup_f");
  c.push_back("L1_to_eq");
  return c;
}

inline std::string diagnostics_row(const DiagnosticsRecord& d) {
  std::string s = format_double(d.t) + "," + format_double(d.N) + "," + format_double(d.E) + "," +
                  format_double(d.M_half) + "," + format_double(d.M_minus_half) + "," + format_double(d.S) + "," +
                  format_double(d.D);
  for (const auto& [e, v] : d.I_eps) s += "," + format_double(v);
  s += "," + format_double(d.sup_f) + "," + format_double(d.L1_to_eq);
  return s;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string diagnostics_csv(const Trajectory& traj, const std::vector<double>& eps_list) {
  std::string s;
  const auto cols = diagnostics_columns(eps_list);
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
  for (const auto& smp : traj.samples) s += diagnostics_row(smp.diag) + "\n";
  return s;
}

/// Parses diagnostics.csv back into records (eps values taken from the header).
inline std::vector<DiagnosticsRecord> read_diagnostics_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) header.push_back(detail::trim(c));
  }
  if (header.size() < 9 || header[0] != "t" || header[header.size() - 1] != "L1_to_eq")
    throw FormatError(path.string() + ": unexpected header");
  std::vector<double> eps;
  for (std::size_t i = 7; i + 2 < header.size(); ++i) {
    if (header[i].rfind("I_eps_", 0) != 0) throw FormatError(path.string() + ": unexpected column " + header[i]);
    auto e = detail::parse_number(header[i].substr(6));
    if (!e) throw FormatError(path.string() + ": bad eps in " + header[i]);
    eps.push_back(*e);
  }
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto vals = detail::parse_list(line);
    if (!vals || vals->size() != header.size()) throw FormatError(path.string() + ": malformed row");
    const auto& v = *vals;
    DiagnosticsRecord d;
    d.t = v[0], d.N = v[1], d.E = v[2], d.M_half = v[3], d.M_minus_half = v[4], d.S = v[5], d.D = v[6];
    for (std::size_t q = 0; q < eps.size(); ++q) d.I_eps.emplace_back(eps[q], v[7 + q]);
    d.sup_f = v[v.size() - 2];
    d.L1_to_eq = v[v.size() - 1];
    out.push_back(std::move(d));
  }
  return out;
}

inline std::string snapshot_csv(const DistributionState& st) {
  std::string s = "x,f\n";
  for (std::size_t i = 0; i < st.size(); ++i) s += format_double(st.grid.x(i)) + "," + format_double(st.f[i]) + "\n";
  return s;
}

inline std::string snapshot_name(double t) { return "state_t" + format_double(t) + ".csv"; }

// ---------------------------------------------------------------------------

/// Everything derived from a RunConfig before integration.
struct RunSetup {
  RunConfig config;
  PotentialModel model;
  EnergyGrid grid;
  KernelTensor tensor;
  DistributionState initial;
  DistributionState reference;  // equilibrium with the initial discrete N and E
  std::string reference_kind;
  bool tensor_rebuilt = false;
};

/// Equilibrium for the L1_to_eq column: the grid state with the same discrete
/// N and E when it exists, else the sampled continuum regular part.
inline DistributionState reference_equilibrium(const DistributionState& initial, std::string* kind = nullptr) {
  const double N = moment(initial, 0.0), E = moment(initial, 1.0);
  if (!(N > 0.0) || !(E > 0.0)) {
    if (kind) *kind = "zero";
    return DistributionState::zeros(initial.grid);
  }
  if (auto fit = fit_discrete_equilibrium(initial.grid, N, E)) {
    if (kind) *kind = "grid";
    return std::move(*fit);
  }
  if (kind) *kind = "continuum";
  return discretize_equilibrium(solve_equilibrium(N, E), initial.grid).state;
}

inline RunSetup prepare_run(const RunConfig& cfg, const fs::path& cache_dir) {
  PotentialModel model = build_potential(cfg.potential);
  EnergyGrid grid = build_grid(cfg);
  bool rebuilt = false;
  KernelTensor tensor = cache_dir.empty() ? build_tensor(model, grid, cfg.quad)
                                          : ensure_tensor(model, grid, cfg.quad, cache_dir, &rebuilt);
  DistributionState initial = build_initial(cfg.initial, grid);
  std::string kind;
  DistributionState ref = reference_equilibrium(initial, &kind);
  return {cfg, std::move(model), grid, std::move(tensor), std::move(initial), std::move(ref), kind, rebuilt};
}

inline std::vector<BoundReport> run_monitors(const RunConfig& cfg, const PotentialModel& model, const Trajectory& traj,
                                             const DistributionState& reference) {
  std::vector<BoundReport> reps;
  reps.push_back(check_conservation(traj));
  reps.push_back(check_non_condensation(traj, model, cfg.diagnostics.eps_list));
  for (double p : cfg.diagnostics.p_list) reps.push_back(check_negative_moment(traj, model, p));
  reps.push_back(check_linf(traj, model.b0()));
  reps.push_back(check_entropy(traj));
  reps.push_back(check_convergence_to_equilibrium(traj, reference, &model));
  reps.push_back(describe_moment_production(traj, 3.0));
  const double t0 = traj.samples.size() > 1 ? traj.samples[1].diag.t : 0.0;
  reps.push_back(describe_entropy_floor(traj, t0));
  return reps;
}

inline bool all_applicable_pass(const std::vector<BoundReport>& reps) {
  for (const auto& r : reps)
    if (r.applicable && !r.pass) return false;
  return true;
}

inline nlohmann::json report_json(const std::vector<BoundReport>& reps, const std::optional<nlohmann::json>& extra = {}) {
  nlohmann::json j;
  j["pass"] = all_applicable_pass(reps);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reps) arr.push_back(to_json(r));
  j["monitors"] = arr;
  if (extra) j["stability"] = *extra;
  return j;
}

inline void write_run_directory(const fs::path& dir, const RunSetup& setup, const Trajectory& traj,
                                const std::vector<BoundReport>& reps, const std::optional<nlohmann::json>& stability) {
  fs::create_directories(dir);
  write_text(dir / "config.echo", echo_config(setup.config));
  write_text(dir / "diagnostics.csv", diagnostics_csv(traj, setup.config.diagnostics.eps_list));
  nlohmann::json meta;
  meta["grid"] = setup.grid.descriptor();
  meta["grid_hash"] = traj.grid_hash;
  meta["tensor_hash"] = traj.tensor_hash;
  meta["potential"] = setup.model.descriptor();
  meta["steps"] = traj.steps;
  meta["max_dt"] = traj.max_dt;
  meta["clipped_mass"] = traj.clipped_mass;
  meta["cfl_warnings"] = traj.cfl_warnings;
  meta["worst_step_entropy_drop"] = traj.worst_step_entropy_drop;
  meta["reference_equilibrium"] = setup.reference_kind;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : traj.samples) {
    nlohmann::json e{{"t", s.diag.t}, {"dissipation_integral", s.dissipation_integral}, {"tail_mass", s.diag.tail}};
    if (setup.config.snapshots) {
      const auto name = snapshot_name(s.diag.t);
      write_text(dir / name, snapshot_csv(s.state));
      e["snapshot"] = name;
    }
    samples.push_back(std::move(e));
  }
  meta["samples"] = samples;
  write_text(dir / "trajectory.json", meta.dump(2) + "\n");
  write_text(dir / "reference_equilibrium.csv", snapshot_csv(setup.reference));
  write_text(dir / "report.json", report_json(reps, stability).dump(2) + "\n");
}

/// Rebuilds a Trajectory from a run directory written with snapshots.
inline Trajectory load_trajectory(const fs::path& dir, const RunConfig& cfg, const EnergyGrid& grid) {
  const auto meta = nlohmann::json::parse(read_text(dir / "trajectory.json"));
  const auto diags = read_diagnostics_csv(dir / "diagnostics.csv");
  const auto& samples = meta.at("samples");
  if (samples.size() != diags.size()) throw FormatError(dir.string() + ": trajectory.json and diagnostics.csv disagree");
  Trajectory traj;
  traj.config = cfg.solver;
  traj.grid_hash = meta.at("grid_hash").get<std::uint64_t>();
  traj.tensor_hash = meta.at("tensor_hash").get<std::uint64_t>();
  traj.steps = meta.at("steps").get<std::size_t>();
  traj.max_dt = meta.at("max_dt").get<double>();
  traj.clipped_mass = meta.at("clipped_mass").get<double>();
  traj.cfl_warnings = meta.at("cfl_warnings").get<std::size_t>();
  traj.worst_step_entropy_drop = meta.at("worst_step_entropy_drop").get<double>();
  for (std::size_t m = 0; m < diags.size(); ++m) {
    const auto& e = samples[m];
    if (!e.contains("snapshot")) throw FormatError(dir.string() + ": run was written without snapshots");
    DistributionState st = read_state_csv((dir / e.at("snapshot").get<std::string>()).string(), grid, diags[m].t);
    DiagnosticsRecord d = diags[m];
    for (double p : cfg.diagnostics.p_list) d.M_p.emplace_back(p, moment(st, -p));
    d.tail = e.value("tail_mass", 0.0);
    traj.samples.push_back({std::move(d), std::move(st), e.at("dissipation_integral").get<double>()});
  }
  return traj;
}

struct RunOutcome {
  RunSetup setup;
  Trajectory trajectory;
  std::vector<BoundReport> reports;
  std::optional<StabilityReport> stability_full;              // f0 against the largest perturbation
  std::vector<std::pair<double, double>> stability_sup;       // (perturbation, sup_t d(t))
};

/// Runs a configuration, evaluates every monitor and, for each stability
/// perturbation, the paired-run experiment.
inline RunOutcome execute_run(const RunConfig& cfg, const fs::path& cache_dir) {
  RunOutcome out{prepare_run(cfg, cache_dir), {}, {}, std::nullopt, {}};
  auto& s = out.setup;
  out.trajectory = run(s.initial, s.tensor, cfg.solver, cfg.diagnostics, &s.reference);
  out.reports = run_monitors(cfg, s.model, out.trajectory, s.reference);
  if (!cfg.stability_perturbations.empty()) {
    SolverConfig sc = cfg.solver;
    sc.track_dissipation = false;
    const Trajectory base = run(s.initial, s.tensor, sc);
    auto sorted = cfg.stability_perturbations;
    std::sort(sorted.rbegin(), sorted.rend());
    out.stability_full = stability_experiment(s.initial, perturbed(s.initial, sorted.front()), s.tensor, sc);
    for (double d : sorted) {
      const Trajectory other = run(perturbed(s.initial, d), s.tensor, sc);
      out.stability_sup.emplace_back(d, paired_distance(base, other, s.initial).sup_distance);
    }
  }
  return out;
}

inline std::optional<nlohmann::json> stability_json(const RunOutcome& o) {
  if (!o.stability_full) return std::nullopt;
  nlohmann::json j = to_json(*o.stability_full);
  nlohmann::json sup = nlohmann::json::array();
  bool ordered = true;
  for (std::size_t q = 0; q < o.stability_sup.size(); ++q) {
    sup.push_back({{"perturbation", o.stability_sup[q].first}, {"sup_distance", o.stability_sup[q].second}});
    if (q > 0 && o.stability_sup[q].second > o.stability_sup[q - 1].second) ordered = false;
  }
  j["perturbation_series"] = sup;
  j["series_ordered"] = ordered;
  return j;
}

}  // namespace nordheim
