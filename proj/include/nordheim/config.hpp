#pragma once

// Sectioned key=value run configuration, its canonical echo, the initial
// data it describes and the shipped scenario presets.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nordheim/collision_kernel.hpp"
#include "nordheim/equilibrium.hpp"
#include "nordheim/errors.hpp"
#include "nordheim/grid.hpp"
#include "nordheim/measure.hpp"
#include "nordheim/potentials.hpp"
#include "nordheim/solver.hpp"

namespace nordheim {

/// Every problem found while parsing, each prefixed by "section.key".
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& x : e) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
  std::vector<std::string> errors_;
};

struct PotentialSpec {
  std::string kind = "eta_rational";  // hard_sphere | eta_rational | table
  double b0 = 1.0;
  double eta = 2.0;
  std::string k = "a^2";  // table only
  std::string path;       // table only
  std::optional<double> cap;
};

struct InitialSpec {
  std::string kind = "exponential";  // exponential | equilibrium | two_bump | file
  double theta_scale = 1.0;
  double amplitude = 1.0;
  double N = 1.0, E = 1.0;
  double perturbation_amplitude = 0.0;
  std::vector<double> centers{1.0, 2.0};
  std::vector<double> widths{0.05, 0.05};
  std::vector<double> masses{0.3, 0.3};
  std::string path;
};

struct RunConfig {
  PotentialSpec potential;
  std::size_t n = 96;
  double x_max = 16.0;
  QuadratureSpec quad;
  InitialSpec initial;
  SolverConfig solver;
  DiagnosticsSpec diagnostics;
  std::vector<double> stability_perturbations;
  std::string output_dir = "out";
  bool snapshots = true;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_number(std::string_view s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || p != end || t.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::vector<double>> parse_list(std::string_view s) {
  std::string t = trim(s);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') return std::nullopt;
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  if (trim(t).empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_number(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

inline std::string list_text(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  static const std::map<std::string, std::set<std::string>> known = {
      {"potential", {"kind", "b0", "eta", "k", "path", "cap"}},
      {"grid", {"n", "x_max"}},
      {"quadrature", {"s_order", "theta_order"}},
      {"initial", {"kind", "theta_scale", "amplitude", "N", "E", "perturbation_amplitude", "centers", "widths",
                   "masses", "path"}},
      {"time", {"scheme", "dt", "t_end", "sample_every", "cfl_safety", "track_dissipation"}},
      {"diagnostics", {"eps_list", "p_list", "stability_perturbations"}},
      {"output", {"dir", "snapshots"}}};

  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!known.count(section)) errors.push_back(section + ": unknown section (line " + std::to_string(lineno) + ")");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back((section.empty() ? "?" : section) + ": line " + std::to_string(lineno) + " is not key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const std::string loc = section + "." + key;
    if (!known.count(section)) continue;  // already reported
    if (!known.at(section).count(key)) {
      errors.push_back(loc + ": unknown key");
      continue;
    }
    if (!seen.insert(loc).second) errors.push_back(loc + ": duplicate key");

    auto num = [&](double& dst) {
      if (auto v = detail::parse_number(val)) dst = *v;
      else errors.push_back(loc + ": expected a number, got '" + val + "'");
    };
    auto list = [&](std::vector<double>& dst) {
      if (auto v = detail::parse_list(val)) dst = *v;
      else errors.push_back(loc + ": expected a list of numbers, got '" + val + "'");
    };
    auto integer = [&](auto& dst) {
      auto v = detail::parse_number(val);
      if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9) {
        errors.push_back(loc + ": expected an integer, got '" + val + "'");
        return;
      }
      if (*v < 0) {
        errors.push_back(loc + ": must be positive");
        return;
      }
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
    };
    auto boolean = [&](bool& dst) {
      if (val == "true") dst = true;
      else if (val == "false") dst = false;
      else errors.push_back(loc + ": expected true or false, got '" + val + "'");
    };

    if (section == "potential") {
      if (key == "kind") c.potential.kind = val;
      else if (key == "b0") num(c.potential.b0);
      else if (key == "eta") num(c.potential.eta);
      else if (key == "k") c.potential.k = val;
      else if (key == "path") c.potential.path = val;
      else if (key == "cap") {
        double v = 0.0;
        num(v);
        c.potential.cap = v;
      }
    } else if (section == "grid") {
      if (key == "n") integer(c.n);
      else num(c.x_max);
    } else if (section == "quadrature") {
      if (key == "s_order") integer(c.quad.s_order);
      else integer(c.quad.theta_order);
    } else if (section == "initial") {
      auto& s = c.initial;
      if (key == "kind") s.kind = val;
      else if (key == "theta_scale") num(s.theta_scale);
      else if (key == "amplitude") num(s.amplitude);
      else if (key == "N") num(s.N);
      else if (key == "E") num(s.E);
      else if (key == "perturbation_amplitude") num(s.perturbation_amplitude);
      else if (key == "centers") list(s.centers);
      else if (key == "widths") list(s.widths);
      else if (key == "masses") list(s.masses);
      else if (key == "path") s.path = val;
    } else if (section == "time") {
      auto& s = c.solver;
      if (key == "scheme") {
        if (val == "euler") s.scheme = Scheme::Euler;
        else if (val == "duhamel") s.scheme = Scheme::Duhamel;
        else errors.push_back(loc + ": expected euler or duhamel, got '" + val + "'");
      } else if (key == "dt") {
        if (val == "auto") s.dt = 0.0;
        else num(s.dt);
      } else if (key == "t_end") num(s.t_end);
      else if (key == "sample_every") num(s.sample_every);
      else if (key == "cfl_safety") num(s.cfl_safety);
      else if (key == "track_dissipation") boolean(s.track_dissipation);
    } else if (section == "diagnostics") {
      if (key == "eps_list") list(c.diagnostics.eps_list);
      else if (key == "p_list") list(c.diagnostics.p_list);
      else list(c.stability_perturbations);
    } else if (section == "output") {
      if (key == "dir") c.output_dir = val;
      else boolean(c.snapshots);
    }
  }

  // constraints
  auto need = [&](bool ok, const std::string& loc, const std::string& msg) {
    if (!ok) errors.push_back(loc + ": " + msg);
  };
  const auto& p = c.potential;
  need(p.kind == "hard_sphere" || p.kind == "eta_rational" || p.kind == "table", "potential.kind",
       "expected hard_sphere, eta_rational or table");
  need(p.b0 > 0.0 && std::isfinite(p.b0), "potential.b0", "must be positive");
  need(p.eta >= 1.0 && std::isfinite(p.eta), "potential.eta", "must be >= 1");
  if (p.kind == "table") need(!p.path.empty(), "potential.path", "required for a table potential");
  if (p.cap) need(*p.cap > 0.0, "potential.cap", "must be positive");
  need(c.n >= 4, "grid.n", "must be >= 4");
  need(c.n <= 1024, "grid.n", "must be <= 1024");
  need(c.x_max > 0.0 && std::isfinite(c.x_max), "grid.x_max", "must be positive");
  need(c.quad.s_order >= 2, "quadrature.s_order", "must be >= 2");
  need(c.quad.theta_order >= 2, "quadrature.theta_order", "must be >= 2");
  const auto& s = c.initial;
  if (s.kind == "exponential") {
    need(s.theta_scale > 0.0, "initial.theta_scale", "must be positive");
    need(s.amplitude > 0.0 && std::isfinite(s.amplitude), "initial.amplitude", "must be positive");
  } else if (s.kind == "equilibrium") {
    need(s.N > 0.0 && std::isfinite(s.N), "initial.N", "must be positive");
    need(s.E > 0.0 && std::isfinite(s.E), "initial.E", "must be positive");
    need(std::abs(s.perturbation_amplitude) < 1.0, "initial.perturbation_amplitude", "must lie in (-1, 1)");
  } else if (s.kind == "two_bump") {
    need(s.centers.size() == s.widths.size() && s.centers.size() == s.masses.size() && !s.centers.empty(),
         "initial.centers", "centers, widths and masses must have the same nonzero length");
    for (double v : s.centers) need(v > 0.0, "initial.centers", "must be positive");
    for (double v : s.widths) need(v > 0.0, "initial.widths", "must be positive");
    for (double v : s.masses) need(v >= 0.0 && std::isfinite(v), "initial.masses", "must be finite and >= 0");
  } else if (s.kind == "file") {
    need(!s.path.empty(), "initial.path", "required for file data");
  } else {
    errors.push_back("initial.kind: expected exponential, equilibrium, two_bump or file");
  }
  need(c.solver.t_end > 0.0 && std::isfinite(c.solver.t_end), "time.t_end", "must be positive");
  need(c.solver.sample_every > 0.0, "time.sample_every", "must be positive");
  need(c.solver.dt >= 0.0 && std::isfinite(c.solver.dt), "time.dt", "must be positive or auto");
  need(c.solver.cfl_safety > 0.0 && c.solver.cfl_safety <= 1.0, "time.cfl_safety", "must lie in (0, 1]");
  for (double e : c.diagnostics.eps_list) need(e > 0.0, "diagnostics.eps_list", "entries must be positive");
  for (double q : c.diagnostics.p_list) need(q > 0.0 && q <= 0.5, "diagnostics.p_list", "entries must lie in (0, 1/2]");
  for (double q : c.stability_perturbations)
    need(q > 0.0, "diagnostics.stability_perturbations", "entries must be positive");
  need(!c.output_dir.empty(), "output.dir", "must not be empty");
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text of a configuration; parsing it gives back the same values.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& p = c.potential;
  o << "[potential]\nkind = " << p.kind << "\n";
  o << "b0 = " << format_double(p.b0) << "\neta = " << format_double(p.eta) << "\n";
  if (p.kind == "table") o << "k = " << p.k << "\npath = " << p.path << "\n";
  if (p.cap) o << "cap = " << format_double(*p.cap) << "\n";
  o << "\n[grid]\nn = " << c.n << "\nx_max = " << format_double(c.x_max) << "\n";
  o << "\n[quadrature]\ns_order = " << c.quad.s_order << "\ntheta_order = " << c.quad.theta_order << "\n";
  const auto& s = c.initial;
  o << "\n[initial]\nkind = " << s.kind << "\n";
  if (s.kind == "exponential") {
    o << "theta_scale = " << format_double(s.theta_scale) << "\namplitude = " << format_double(s.amplitude) << "\n";
  } else if (s.kind == "equilibrium") {
    o << "N = " << format_double(s.N) << "\nE = " << format_double(s.E)
      << "\nperturbation_amplitude = " << format_double(s.perturbation_amplitude) << "\n";
  } else if (s.kind == "two_bump") {
    o << "centers = " << detail::list_text(s.centers) << "\nwidths = " << detail::list_text(s.widths)
      << "\nmasses = " << detail::list_text(s.masses) << "\n";
  } else {
    o << "path = " << s.path << "\n";
  }
  const auto& t = c.solver;
  o << "\n[time]\nscheme = " << scheme_name(t.scheme) << "\n";
  o << "dt = " << (t.dt > 0.0 ? format_double(t.dt) : std::string("auto")) << "\n";
  o << "t_end = " << format_double(t.t_end) << "\nsample_every = " << format_double(t.sample_every) << "\n";
  o << "cfl_safety = " << format_double(t.cfl_safety) << "\n";
  o << "track_dissipation = " << (t.track_dissipation ? "true" : "false") << "\n";
  o << "\n[diagnostics]\neps_list = " << detail::list_text(c.diagnostics.eps_list)
    << "\np_list = " << detail::list_text(c.diagnostics.p_list) << "\n";
  if (!c.stability_perturbations.empty())
    o << "stability_perturbations = " << detail::list_text(c.stability_perturbations) << "\n";
  o << "\n[output]\ndir = " << c.output_dir << "\nsnapshots = " << (c.snapshots ? "true" : "false") << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------

inline PotentialModel build_potential(const PotentialSpec& p) {
  PotentialModel m = p.kind == "hard_sphere" ? PotentialModel::hard_sphere()
                     : p.kind == "eta_rational"
                         ? PotentialModel::eta_rational(p.b0, p.eta)
                         : PotentialModel::from_table_file(p.path, KScaling::expression(p.k), p.b0, p.eta);
  if (p.cap) m = m.with_cap(*p.cap);
  return m;
}

inline EnergyGrid build_grid(const RunConfig& c) { return EnergyGrid(c.n, c.x_max); }

/// Reads a two-column (x, f) CSV whose x column matches the grid nodes.
inline DistributionState read_state_csv(const std::string& path, const EnergyGrid& grid, double t = 0.0) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open state file " + path);
  std::vector<double> f;
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == 'x') continue;
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw FormatError(path + ": expected x,f rows");
    auto x = detail::parse_number(s.substr(0, comma));
    auto v = detail::parse_number(s.substr(comma + 1));
    if (!x || !v) throw FormatError(path + ": malformed row '" + s + "'");
    const std::size_t i = f.size();
    if (i >= grid.size() || std::abs(*x - grid.x(i)) > 1e-12 * std::max(1.0, grid.x(i)))
      throw FormatError(path + ": x column does not match the grid nodes");
    f.push_back(*v);
  }
  if (f.size() != grid.size()) throw FormatError(path + ": row count does not match the grid");
  return DistributionState(grid, std::move(f), t);
}

/// mass_i / (width sqrt(center)) on [center - width/2, center + width/2], cell averaged.
inline DistributionState two_bump_state(const EnergyGrid& g, const std::vector<double>& centers,
                                        const std::vector<double>& widths, const std::vector<double>& masses) {
  std::vector<double> f(g.size(), 0.0);
  const double h = g.h();
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const double lo = centers[b] - 0.5 * widths[b], hi = centers[b] + 0.5 * widths[b];
    const double height = masses[b] / (widths[b] * std::sqrt(centers[b]));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = static_cast<double>(i) * h, e = a + h;
      const double overlap = std::max(0.0, std::min(hi, e) - std::max(lo, a));
      f[i] += height * overlap / h;
    }
  }
  return {g, std::move(f)};
}

inline DistributionState build_initial(const InitialSpec& s, const EnergyGrid& g) {
  if (s.kind == "exponential")
    return DistributionState::sample(g, [&](double x) { return s.amplitude * std::exp(-x / s.theta_scale); });
  if (s.kind == "equilibrium") {
    const auto eq = solve_equilibrium(s.N, s.E);
    const double a = s.perturbation_amplitude;
    return DistributionState::sample(g, [&](double x) {
      return equilibrium_density(eq, x) * (1.0 + a * std::cos(2.0 * std::numbers::pi * x / g.x_max()));
    });
  }
  if (s.kind == "two_bump") return two_bump_state(g, s.centers, s.widths, s.masses);
  return read_state_csv(s.path, g);
}

/// Exponential datum amplitude e^{-x/theta} with mass N.
inline double exponential_amplitude(double N, double theta) { return N / (std::pow(theta, 1.5) * kGamma32); }

/// the perturbation g0 = f0 + delta psi / ||psi||_1, psi = e^{-x}
inline DistributionState perturbed(const DistributionState& f0, double delta) {
  const auto psi = DistributionState::sample(f0.grid, [](double x) { return std::exp(-x); });
  const double norm = l1_distance(psi, DistributionState::zeros(f0.grid));
  std::vector<double> g(f0.f);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta * psi.f[i] / norm;
  return {f0.grid, std::move(g)};
}

// ---------------------------------------------------------------------------

struct Scenario {
  std::string name;
  std::string summary;
  std::string config_text;
};

inline const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> list = [] {
    std::vector<Scenario> v;
    const double crit = critical_energy_shape();
    const double theta_low = 0.7 * crit / 1.5;  // E / (3N/2) for N = 1, E at ratio 0.7
    const std::string low_amp = format_double(exponential_amplitude(1.0, theta_low));
    const std::string hi_amp = format_double(exponential_amplitude(1.0, 2.0 / 3.0));
    const std::string common_diag = "\n[diagnostics]\neps_list = [0.01, 0.001]\np_list = [0.5]\n";
    v.push_back({"relaxation_high_T", "exponential data with N = E = 1 relaxing under phi_hat = r^2/(1+r^2)",
                 "[potential]\nkind = eta_rational\nb0 = 1\neta = 2\n\n[grid]\nn = 96\nx_max = 16\n"
                 "\n[initial]\nkind = exponential\ntheta_scale = " +
                     format_double(2.0 / 3.0) + "\namplitude = " + hi_amp +
                     "\n\n[time]\nscheme = euler\nt_end = 5\nsample_every = 0.25\n" + common_diag +
                     "\n[output]\ndir = out/relaxation_high_T\n"});
    v.push_back({"low_T_no_condensation",
                 "exponential data at temperature ratio 0.7; the condensate indicators stay in their envelope",
                 "[potential]\nkind = eta_rational\nb0 = 1\neta = 2\n\n[grid]\nn = 96\nx_max = 1.8\n"
                 "\n[initial]\nkind = exponential\ntheta_scale = " +
                     format_double(theta_low) + "\namplitude = " + low_amp +
                     "\n\n[time]\nscheme = euler\nt_end = 2\nsample_every = 0.1\n" + common_diag +
                     "\n[output]\ndir = out/low_T_no_condensation\n"});
    v.push_back({"two_bump_example", "narrow bumps at x = 1 and x = 2 spreading mass to x = 3 under hard spheres",
                 "[potential]\nkind = hard_sphere\n\n[grid]\nn = 96\nx_max = 16\n"
                 "\n[initial]\nkind = two_bump\ncenters = [1, 2]\nwidths = [0.05, 0.05]\nmasses = [0.3, 0.3]\n"
                 "\n[time]\nscheme = euler\nt_end = 1\nsample_every = 0.05\n" +
                     common_diag + "\n[output]\ndir = out/two_bump_example\n"});
    v.push_back({"hard_sphere_contrast", "the high temperature relaxation repeated with the hard-sphere kernel",
                 "[potential]\nkind = hard_sphere\n\n[grid]\nn = 96\nx_max = 16\n"
                 "\n[initial]\nkind = exponential\ntheta_scale = " +
                     format_double(2.0 / 3.0) + "\namplitude = " + hi_amp +
                     "\n\n[time]\nscheme = euler\nt_end = 5\nsample_every = 0.25\n" + common_diag +
                     "\n[output]\ndir = out/hard_sphere_contrast\n"});
    v.push_back({"stability_pair", "exponential data against perturbations of L1 size 1e-3 and 1e-4",
                 "[potential]\nkind = eta_rational\nb0 = 1\neta = 2\n\n[grid]\nn = 96\nx_max = 16\n"
                 "\n[initial]\nkind = exponential\ntheta_scale = " +
                     format_double(2.0 / 3.0) + "\namplitude = " + hi_amp +
                     "\n\n[time]\nscheme = euler\nt_end = 1\nsample_every = 0.1\n" + common_diag +
                     "stability_perturbations = [0.001, 0.0001]\n\n[output]\ndir = out/stability_pair\n"});
    return v;
  }();
  return list;
}

inline const Scenario* find_scenario(std::string_view name) {
  for (const auto& s : scenarios())
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace nordheim
