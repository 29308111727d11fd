// nordheim: kernel cache, runs, verification and equilibria from the command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nordheim/config.hpp"
#include "nordheim/equilibrium.hpp"
#include "nordheim/io.hpp"
#include "nordheim/verification.hpp"

namespace fs = std::filesystem;
using namespace nordheim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

RunConfig resolve_config(const std::string& config_path, const std::string& scenario) {
  if (!scenario.empty()) {
    const Scenario* s = find_scenario(scenario);
    if (!s) throw ConfigError({"scenario: unknown preset '" + scenario + "'"});
    return parse_config(s->config_text);
  }
  if (config_path.empty()) throw ConfigError({"config: give --config FILE or --scenario NAME"});
  return load_config(config_path);
}

void print_monitors(const std::vector<BoundReport>& reps) {
  for (const auto& r : reps) {
    const char* status = !r.applicable ? "n/a " : r.pass ? "PASS" : "FAIL";
    std::printf("  %s %s\n", status, r.name.c_str());
  }
}

int cmd_kernel_build(const std::string& config, const std::string& scenario, const fs::path& cache, bool force) {
  const RunConfig cfg = resolve_config(config, scenario);
  const PotentialModel model = build_potential(cfg.potential);
  const EnergyGrid grid = build_grid(cfg);
  const TensorKey key = tensor_key(model, grid, cfg.quad);
  const fs::path path = cache / cache_file_name(key);
  if (force && fs::exists(path)) fs::remove(path);
  bool rebuilt = false;
  ensure_tensor(model, grid, cfg.quad, cache, &rebuilt);
  std::printf("%s %s\n", rebuilt ? "built" : "cached", path.string().c_str());
  return kExitOk;
}

int cmd_run(const std::string& config, const std::string& scenario, const std::string& out, const fs::path& cache) {
  RunConfig cfg = resolve_config(config, scenario);
  if (!out.empty()) cfg.output_dir = out;
  const RunOutcome o = execute_run(cfg, cache);
  write_run_directory(cfg.output_dir, o.setup, o.trajectory, o.reports, stability_json(o));
  std::printf("run %s: %zu steps, t_end %s, output %s\n", o.setup.model.descriptor().c_str(), o.trajectory.steps,
              format_double(cfg.solver.t_end).c_str(), cfg.output_dir.c_str());
  print_monitors(o.reports);
  if (o.stability_full) std::printf("  %s stability\n", o.stability_full->pass() ? "PASS" : "FAIL");
  return kExitOk;
}

int cmd_verify(const fs::path& dir) {
  const RunConfig cfg = load_config((dir / "config.echo").string());
  const PotentialModel model = build_potential(cfg.potential);
  const EnergyGrid grid = build_grid(cfg);
  const Trajectory traj = load_trajectory(dir, cfg, grid);
  const DistributionState ref = read_state_csv((dir / "reference_equilibrium.csv").string(), grid);
  const auto reps = run_monitors(cfg, model, traj, ref);
  std::cout << report_json(reps).dump(2) << "\n";
  std::fprintf(stderr, "verify %s\n", dir.string().c_str());
  for (const auto& r : reps)
    std::fprintf(stderr, "  %s %s\n", !r.applicable ? "n/a " : r.pass ? "PASS" : "FAIL", r.name.c_str());
  return all_applicable_pass(reps) ? kExitOk : kExitValidation;
}

int cmd_equilibrium(double N, double E) {
  const auto eq = solve_equilibrium(N, E);
  nlohmann::json j{{"A", eq.A},
                   {"kappa", eq.kappa},
                   {"n0", eq.n0},
                   {"n0_from_ratio", eq.n0_from_ratio},
                   {"ratio", eq.ratio},
                   {"residuals", {{"N", eq.residual_N}, {"E", eq.residual_E}}}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isotropic Nordheim equation toolkit"};
  app.require_subcommand(1);
  std::string cache_dir = "nordheim_cache";
  app.add_option("--cache-dir", cache_dir, "directory for kernel tensors")->capture_default_str();

  auto* kernel = app.add_subcommand("kernel", "kernel tensor cache");
  kernel->require_subcommand(1);
  auto* build = kernel->add_subcommand("build", "build or refresh the tensor for a configuration");
  std::string k_config, k_scenario;
  bool k_force = false;
  build->add_option("--config", k_config, "run configuration file");
  build->add_option("--scenario", k_scenario, "preset name");
  build->add_flag("--force", k_force, "rebuild even when cached");

  auto* runc = app.add_subcommand("run", "integrate a configuration and write a run directory");
  std::string r_config, r_scenario, r_out;
  runc->add_option("--config", r_config, "run configuration file");
  runc->add_option("--scenario", r_scenario, "preset name");
  runc->add_option("--out", r_out, "output directory (overrides output.dir)");

  auto* verify = app.add_subcommand("verify", "re-run the monitors on a saved run directory");
  std::string v_dir;
  verify->add_option("dir", v_dir, "run directory")->required();

  auto* equil = app.add_subcommand("equilibrium", "Bose-Einstein equilibrium for mass N and energy E");
  double N = 0.0, E = 0.0;
  equil->add_option("--N", N, "mass")->required();
  equil->add_option("--E", E, "energy")->required();

  auto* scen = app.add_subcommand("scenario", "shipped presets");
  scen->require_subcommand(1);
  auto* list = scen->add_subcommand("list", "list presets");
  auto* show = scen->add_subcommand("show", "print a preset configuration");
  std::string s_name;
  show->add_option("name", s_name, "preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (build->parsed()) return cmd_kernel_build(k_config, k_scenario, cache_dir, k_force);
    if (runc->parsed()) return cmd_run(r_config, r_scenario, r_out, cache_dir);
    if (verify->parsed()) return cmd_verify(v_dir);
    if (equil->parsed()) return cmd_equilibrium(N, E);
    if (list->parsed()) {
      for (const auto& s : scenarios()) std::printf("%-24s %s\n", s.name.c_str(), s.summary.c_str());
      return kExitOk;
    }
    if (show->parsed()) {
      const Scenario* s = find_scenario(s_name);
      if (!s) {
        std::fprintf(stderr, "unknown scenario '%s'\n", s_name.c_str());
        return kExitValidation;
      }
      std::cout << echo_config(parse_config(s->config_text));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    for (const auto& msg : e.errors()) std::fprintf(stderr, "config error: %s\n", msg.c_str());
    return kExitValidation;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error at t=%s: %s\n", format_double(e.time()).c_str(), e.what());
    return kExitNumeric;
  } catch (const SizingError& e) {
    std::fprintf(stderr, "sizing error: %s (%zu bytes)\n", e.what(), e.required_bytes());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitOk;
}
