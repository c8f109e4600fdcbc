// Batch front end: run scenarios, compare controllers, check Nussbaum
// functions and run the acceptance suite.
//
// Exit status: 0 success, 2 invalid configuration or usage, 3 run did not
// complete (divergence, overflow guard, factorization or domain failure),
// 4 run completed but an invariant monitor or check failed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "expctl/expctl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRunFailed = 3;
constexpr int kExitMonitor = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  double step = 0.0;
  double horizon = 0.0;
  std::string out = "out";
  bool quiet = false;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "Configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "Override key=value (repeatable)");
  cmd->add_option("--step", a.step, "RK4 step in seconds");
  cmd->add_option("--horizon", a.horizon, "Horizon in seconds");
  cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
  cmd->add_flag("--quiet", a.quiet, "Only print errors");
  cmd->add_flag("--json", a.json, "Also write trajectory.json");
}

expctl::RunConfig build_config(const CommonArgs& a) {
  expctl::RunConfig cfg = a.config_path.empty() ? expctl::RunConfig{} : expctl::load_config(a.config_path);
  for (const auto& s : a.sets) cfg.set_assignment(s);
  if (a.step > 0.0) cfg.set("sim.step_s", expctl::format_real(a.step), "--step");
  else if (a.step < 0.0) throw expctl::ConfigError("--step must be positive");
  if (a.horizon > 0.0) cfg.set("sim.horizon_s", expctl::format_real(a.horizon), "--horizon");
  else if (a.horizon < 0.0) throw expctl::ConfigError("--horizon must be positive");
  return cfg;
}

int status_code(const expctl::Trajectory& traj, const expctl::RunReport& rep) {
  if (!traj.completed()) return kExitRunFailed;
  return rep.passed() ? kExitOk : kExitMonitor;
}

int write_run(const expctl::AnyScenario& sc, const fs::path& dir, const CommonArgs& a,
              expctl::Trajectory* keep = nullptr) {
  const auto traj = expctl::run_any(sc);
  const auto rep = expctl::evaluate_run(sc, traj);
  fs::create_directories(dir);
  expctl::save_csv(traj, (dir / "trajectory.csv").string());
  expctl::write_file((dir / "diagnostics.csv").string(),
                     [&](std::ostream& os) { expctl::write_diagnostics_csv(traj, os); });
  expctl::write_file((dir / "report.txt").string(), [&](std::ostream& os) { expctl::write_report(rep, traj, os); });
  if (a.json) expctl::save_json(traj, (dir / "trajectory.json").string());
  if (!a.quiet) {
    std::cout << rep.scenario << ": " << expctl::to_string(traj.status) << ", envelope N "
              << expctl::format_real(rep.envelope.N) << ", " << (rep.passed() ? "all monitors pass" : "monitor failure")
              << " -> " << dir.string() << '\n';
    for (const auto& m : rep.monitors)
      if (!m.passed) std::cout << "  " << m.name << ": " << m.detail << '\n';
  }
  const int code = status_code(traj, rep);
  if (keep) *keep = traj;
  return code;
}

int cmd_run(const std::string& positional, const std::string& flag, const CommonArgs& a) {
  if (!positional.empty() && !flag.empty() && positional != flag)
    throw expctl::ConfigError("scenario given twice: '" + positional + "' and '" + flag + "'");
  const auto cfg = build_config(a);
  const auto sc = expctl::make_scenario(cfg, positional.empty() ? flag : positional);
  return write_run(sc, a.out, a);
}

int cmd_compare(std::vector<std::string> names, const CommonArgs& a) {
  if (names.empty()) names = {"wing-rock-theorem1", "wing-rock-theorem2", "wing-rock-baseline"};
  const auto cfg = build_config(a);
  std::vector<expctl::AnyScenario> scenarios;
  for (const auto& n : names) scenarios.push_back(expctl::make_scenario(cfg, n));
  int worst = kExitOk;
  std::vector<expctl::Trajectory> runs;
  for (const auto& sc : scenarios) {
    expctl::Trajectory traj;
    worst = std::max(worst, write_run(sc, fs::path(a.out) / expctl::scenario_name(sc), a, &traj));
    runs.push_back(std::move(traj));
  }
  expctl::MetricSpec spec;
  spec.lambdas = {0.0};
  for (const auto& sc : scenarios) {
    const double lam = expctl::scenario_lambda(sc);
    if (std::find(spec.lambdas.begin(), spec.lambdas.end(), lam) == spec.lambdas.end()) spec.lambdas.push_back(lam);
  }
  const auto table = expctl::compare_runs(runs, spec);
  expctl::write_file((fs::path(a.out) / "comparison.csv").string(),
                     [&](std::ostream& os) { expctl::write_comparison_csv(table, os); });
  if (!a.quiet) expctl::write_comparison_csv(table, std::cout);
  return worst;
}

int cmd_verify(const std::string& kind, double xi_max, int points, double threshold, bool quiet) {
  const auto spec = expctl::nussbaum_from_name(kind, xi_max);
  expctl::VerifyOptions opt;
  opt.threshold = threshold;
  const auto rep = expctl::verify_enhanced(spec, expctl::uniform_grid(xi_max, points), opt);
  if (!quiet) std::cout << rep.to_text();
  return rep.passed() ? kExitOk : kExitMonitor;
}

int cmd_acceptance(double step, double horizon, bool quiet) {
  expctl::AcceptanceOptions opt;
  if (step > 0.0) opt.wing_rock_step = step;
  if (horizon > 0.0) opt.wing_rock_horizon = horizon;
  opt.on_result = [quiet](const expctl::CriterionResult& r) {
    if (!quiet || !r.passed) std::cout << expctl::format_criterion(r) << std::endl;
  };
  const auto results = expctl::run_acceptance(opt);
  for (const auto& r : results)
    if (!r.passed) return kExitMonitor;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive exponential stabilization toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string run_positional;
  std::string run_scenario;
  auto* run = app.add_subcommand("run", "Simulate one scenario and write trajectory.csv, diagnostics.csv, report.txt");
  run->add_option("name", run_positional, "Scenario name");
  run->add_option("--scenario", run_scenario, "Scenario name");
  add_common(run, run_args);

  CommonArgs cmp_args;
  std::vector<std::string> cmp_names;
  auto* compare = app.add_subcommand("compare", "Run several scenarios and tabulate settling time, peaks and envelopes");
  compare->add_option("--scenario", cmp_names, "Scenario name (repeatable, default: the three wing-rock runs)");
  add_common(compare, cmp_args);

  std::string kind = "sin-exp-square";
  double xi_max = 6.0;
  int points = 1000;
  double threshold = 10.0;
  bool verify_quiet = false;
  auto* verify = app.add_subcommand("verify-nussbaum", "Finite-range growth checks of a Nussbaum function");
  verify->add_option("--kind", kind, "sin-exp-square | cos-exp-square | constant-one | identity")->capture_default_str();
  verify->add_option("--xi-max", xi_max, "Upper end of the window")->capture_default_str();
  verify->add_option("--points-per-unit", points, "Grid density")->capture_default_str();
  verify->add_option("--threshold", threshold, "Growth threshold")->capture_default_str();
  verify->add_flag("--quiet", verify_quiet, "Only set the exit status");

  double acc_step = 0.0;
  double acc_horizon = 0.0;
  bool acc_quiet = false;
  auto* acceptance = app.add_subcommand("acceptance", "Run the acceptance suite");
  acceptance->add_option("--step", acc_step, "Wing-rock RK4 step (default 1e-4)");
  acceptance->add_option("--horizon", acc_horizon, "Wing-rock horizon (default 15)");
  acceptance->add_flag("--quiet", acc_quiet, "Only print failing criteria");

  auto* list = app.add_subcommand("list", "List scenario names and configuration keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_positional, run_scenario, run_args);
    if (*compare) return cmd_compare(cmp_names, cmp_args);
    if (*verify) return cmd_verify(kind, xi_max, points, threshold, verify_quiet);
    if (*acceptance) return cmd_acceptance(acc_step, acc_horizon, acc_quiet);
    if (*list) {
      for (const auto& n : expctl::scenario_names()) std::cout << n << '\n';
      std::cout << '\n';
      for (const auto& k : expctl::config_schema()) std::cout << k.key << "  " << k.help << '\n';
      return kExitOk;
    }
  } catch (const expctl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
