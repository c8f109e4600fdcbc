#pragma once

// Named scenarios with configuration overrides, invariant monitors and the
// plain-text run report.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "expctl/analysis.hpp"
#include "expctl/config.hpp"
#include "expctl/scenarios.hpp"
#include "expctl/trajectory_io.hpp"

namespace expctl {

using AnyScenario = std::variant<Scenario<WingRockRegressor>, Scenario<SyntheticRegressor>, ScalarScenario>;

inline AnyScenario scenario_by_name(const std::string& name, const RunConfig& cfg = {}) {
  const auto seed = cfg.has("scenario.seed") ? static_cast<std::uint64_t>(cfg.integer("scenario.seed")) : 0;
  if (name == "wing-rock-theorem1") return build_wing_rock(ControllerVariant::Theorem1);
  if (name == "wing-rock-theorem2") return build_wing_rock(ControllerVariant::Theorem2);
  if (name == "wing-rock-baseline") return build_wing_rock(ControllerVariant::BaselineLambda0);
  if (name == "synthetic-theorem1") return build_synthetic(seed, ControllerVariant::Theorem1);
  if (name == "synthetic-theorem2") return build_synthetic(seed, ControllerVariant::Theorem2);
  for (auto v : {ControllerVariant::ScalarA, ControllerVariant::ScalarB, ControllerVariant::ScalarC}) {
    if (name != to_string(v)) continue;
    const double a = cfg.has("scenario.a") ? cfg.real("scenario.a") : 1.0;
    const double b = cfg.has("scenario.b") ? cfg.real("scenario.b") : (v == ControllerVariant::ScalarC ? 1.5 : 1.0);
    if (v != ControllerVariant::ScalarC && b != 1.0) throw ConfigError(name + " assumes b = 1");
    if (b == 0.0) throw ConfigError("b must be non-zero");
    return build_scalar(v, a, 1.0, b);
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

namespace detail {

[[noreturn]] inline void not_applicable(const std::string& key, const std::string& scenario) {
  throw ConfigError("key '" + key + "' does not apply to scenario '" + scenario + "'");
}

template <std::size_t K>
std::array<double, K> fixed_list(const RunConfig& cfg, const std::string& key) {
  const auto v = cfg.reals(key);
  if (v.size() != K)
    throw ConfigError("key '" + key + "' needs " + std::to_string(K) + " values, got " + std::to_string(v.size()));
  std::array<double, K> out;
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline void apply_sim(SimOptions& sim, const std::string& key, const RunConfig& cfg) {
  if (key == "sim.horizon_s") sim.horizon = cfg.real(key);
  else if (key == "sim.step_s") sim.step = cfg.real(key);
  else if (key == "sim.record_every") sim.record_every = static_cast<int>(cfg.integer(key));
  else if (key == "sim.divergence_bound") sim.divergence_bound = cfg.real(key);
}

inline void check_sim(const SimOptions& sim) {
  if (!(sim.horizon > 0.0)) throw ConfigError("horizon_s must be positive");
  if (!(sim.step > 0.0) || sim.step > sim.horizon) throw ConfigError("step_s must be in (0, horizon_s]");
  if (sim.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(sim.divergence_bound > 0.0)) throw ConfigError("divergence_bound must be positive");
}

template <RegressorType R>
void apply_key(Scenario<R>& sc, const std::string& key, const RunConfig& cfg) {
  constexpr int N = R::kStates;
  constexpr int Q = R::kParams;
  auto& g = sc.gains;
  if (key == "gains.k") g.k = fixed_list<N>(cfg, key);
  else if (key == "gains.lambda") g.lambda = cfg.real(key);
  else if (key == "gains.delta_theta") sc.bounds.delta_theta = g.delta_theta = cfg.real(key);
  else if (key == "gains.epsilon_psi") g.epsilon_psi = cfg.real(key);
  else if (key == "gains.gamma") g.gamma = cfg.real(key) * Eigen::Matrix<double, Q, Q>::Identity();
  else if (key == "gains.gamma_rho") g.gamma_rho = cfg.real(key);
  else if (key == "gains.quadrature_nodes") g.quadrature_nodes = static_cast<int>(cfg.integer(key));
  else if (key == "gains.residual_tolerance") sc.sim.residual_tolerance = g.residual_tolerance = cfg.real(key);
  else if (key == "gains.nussbaum") g.nussbaum = nussbaum_from_name(cfg.text(key), g.nussbaum.xi_max);
  else if (key == "gains.xi_max") g.nussbaum.xi_max = cfg.real(key);
  else if (key == "initial.x") sc.x0 = fixed_list<N>(cfg, key);
  else if (key == "initial.theta_hat") sc.initial.theta_hat = fixed_list<Q>(cfg, key);
  else if (key == "initial.rho_hat") sc.initial.rho_hat = cfg.real(key);
  else if (key == "initial.xi") sc.initial.xi = cfg.real(key);
  else if (key.starts_with("sim.")) apply_sim(sc.sim, key, cfg);
  else if (key != "scenario.name" && !(key == "scenario.seed" && sc.name.starts_with("synthetic")))
    not_applicable(key, sc.name);
}

inline void apply_key(ScalarScenario& sc, const std::string& key, const RunConfig& cfg) {
  auto& g = sc.gains;
  if (key == "gains.k") g.k = fixed_list<1>(cfg, key)[0];
  else if (key == "gains.lambda") g.lambda = cfg.real(key);
  else if (key == "gains.gamma_a") g.gamma_a = cfg.real(key);
  else if (key == "gains.delta_a" && sc.variant != ControllerVariant::ScalarA) g.delta_a = cfg.real(key);
  else if (key == "gains.nussbaum" && sc.variant == ControllerVariant::ScalarC)
    g.nussbaum = nussbaum_from_name(cfg.text(key), g.nussbaum.xi_max);
  else if (key == "gains.xi_max" && sc.variant == ControllerVariant::ScalarC) g.nussbaum.xi_max = cfg.real(key);
  else if (key == "initial.x") sc.x0 = fixed_list<1>(cfg, key)[0];
  else if (key == "initial.a_hat") sc.a_hat0 = cfg.real(key);
  else if (key == "initial.xi" && sc.variant == ControllerVariant::ScalarC) sc.xi0 = cfg.real(key);
  else if (key.starts_with("sim.")) apply_sim(sc.sim, key, cfg);
  else if (key != "scenario.name" && key != "scenario.a" && key != "scenario.b") not_applicable(key, sc.name);
}

// Builds the loop once so that gain and initial-state rules are enforced.
template <RegressorType R>
void validate_scenario(const Scenario<R>& sc) {
  check_sim(sc.sim);
  BacksteppingLoop<R> loop(sc.model, sc.gains, sc.known_direction(), sc.x0, sc.initial, sc.name);
}

inline void validate_scenario(const ScalarScenario& sc) {
  check_sim(sc.sim);
  ScalarLoop loop(sc.plant, sc.variant, sc.gains, sc.x0, sc.a_hat0, sc.xi0, sc.name);
}

}  // namespace detail

// The scenario is taken from `name` if non-empty, otherwise from scenario.name.
inline AnyScenario make_scenario(const RunConfig& cfg, std::string name = {}) {
  if (name.empty()) {
    if (!cfg.has("scenario.name")) throw ConfigError("no scenario given");
    name = cfg.text("scenario.name");
  }
  AnyScenario sc = scenario_by_name(name, cfg);
  for (const auto& e : cfg.effective()) std::visit([&](auto& s) { detail::apply_key(s, e.key, cfg); }, sc);
  std::visit([](const auto& s) { detail::validate_scenario(s); }, sc);
  return sc;
}

inline const std::string& scenario_name(const AnyScenario& sc) {
  return std::visit([](const auto& s) -> const std::string& { return s.name; }, sc);
}

inline double scenario_lambda(const AnyScenario& sc) {
  return std::visit([](const auto& s) { return s.gains.lambda; }, sc);
}

inline Trajectory run_any(const AnyScenario& sc) {
  return std::visit([](const auto& s) { return run_scenario(s); }, sc);
}

struct MonitorResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::string scenario;
  double lambda = 0.0;
  EnvelopeFit envelope;
  std::vector<MonitorResult> monitors;

  bool passed() const {
    return std::all_of(monitors.begin(), monitors.end(), [](const MonitorResult& m) { return m.passed; });
  }
};

namespace detail {

inline std::string num(double v) { return format_real(v); }

inline void limit_monitors(const Trajectory& traj, std::vector<MonitorResult>& out) {
  const auto times = traj.times();
  if (times.size() < 2) return;
  const double tail = default_tail_start(times);
  for (int r = 0; r < traj.q; ++r) {
    const auto lim = detect_limit(times, traj.estimate(r), tail);
    out.push_back({"theta_hat_" + std::to_string(r + 1) + "-limit", lim.converged,
                   "tail deviation " + num(lim.tail_deviation) + " vs " + num(lim.epsilon) + " after t=" + num(tail)});
  }
  if (traj.adaptive_name == "rho_hat") {
    const auto lim = detect_limit(times, traj.adaptive_series(), tail);
    out.push_back({"rho_hat-limit", lim.converged,
                   "tail deviation " + num(lim.tail_deviation) + " vs " + num(lim.epsilon)});
  }
}

inline void xi_monitors(const Trajectory& traj, double xi_max, std::vector<MonitorResult>& out) {
  const auto xi = traj.adaptive_series();
  const auto mono = check_monotone(xi, 0.0);
  const bool steps_ok = !(traj.min_adaptive_increment < 0.0);
  out.push_back({"xi-monotone", mono.monotone && steps_ok,
                 "min step increment " + num(traj.min_adaptive_increment) + ", worst recorded drop " +
                     num(mono.worst_drop)});
  const double peak = xi.empty() ? 0.0 : *std::max_element(xi.begin(), xi.end());
  out.push_back({"xi-bounded", peak <= xi_max, "max xi " + num(peak) + " vs guard " + num(xi_max)});
}

template <RegressorType R>
void scenario_monitors(const Scenario<R>& sc, const Trajectory& traj, std::vector<MonitorResult>& out) {
  out.push_back({"factorization-residual", traj.max_residual <= sc.gains.residual_tolerance,
                 "max " + num(traj.max_residual) + " vs " + num(sc.gains.residual_tolerance)});
  if (!traj.completed()) return;
  if (sc.known_direction()) {
    const auto rho = traj.adaptive_series();
    const double sign = sc.initial.rho_hat > 0 ? 1.0 : -1.0;
    const bool kept = std::all_of(rho.begin(), rho.end(), [&](double r) { return r * sign > 0.0; });
    out.push_back({"rho_hat-sign", kept, std::string("rho_hat keeps the sign of rho_hat(0) = ") +
                                             num(sc.initial.rho_hat)});
    const ProbeGrid grid{0.0, sc.sim.horizon, std::min(sc.sim.step, 1e-3)};
    const auto ell_theta = mean_theta(sc.model, grid);
    const auto v = lyapunov_known_direction(traj, sc.gains.gamma, sc.gains.gamma_rho,
                                            std::vector<double>(ell_theta.begin(), ell_theta.end()),
                                            mean_b(sc.model, grid));
    const auto d = check_descent(v);
    out.push_back({"lyapunov-descent", d.descending,
                   "V(0) " + num(v.front()) + ", V(T) " + num(v.back()) + ", violations " +
                       std::to_string(d.violations)});
  } else {
    xi_monitors(traj, sc.gains.nussbaum.xi_max, out);
  }
  limit_monitors(traj, out);
}

inline void scenario_monitors(const ScalarScenario& sc, const Trajectory& traj, std::vector<MonitorResult>& out) {
  if (!traj.completed()) return;
  if (sc.variant == ControllerVariant::ScalarC) xi_monitors(traj, sc.gains.nussbaum.xi_max, out);
  limit_monitors(traj, out);
}

}  // namespace detail

inline RunReport evaluate_run(const AnyScenario& sc, const Trajectory& traj) {
  RunReport rep;
  rep.scenario = scenario_name(sc);
  rep.lambda = scenario_lambda(sc);
  rep.monitors.push_back({"completed", traj.completed(),
                          std::string(to_string(traj.status)) + (traj.message.empty() ? "" : ": " + traj.message)});
  rep.envelope = fit_envelope(traj, rep.lambda);
  rep.monitors.push_back({"envelope", rep.envelope.holds,
                          "N = " + detail::num(rep.envelope.N) + " at lambda = " + detail::num(rep.lambda)});
  std::visit([&](const auto& s) { detail::scenario_monitors(s, traj, rep.monitors); }, sc);
  return rep;
}

inline void write_report(const RunReport& rep, const Trajectory& traj, std::ostream& os) {
  os << "scenario: " << rep.scenario << '\n';
  os << "status: " << to_string(traj.status) << '\n';
  if (!traj.completed()) os << "failure_time: " << format_real(traj.failure_time) << '\n';
  os << "steps: " << traj.steps << '\n';
  os << "samples: " << traj.samples.size() << '\n';
  if (!traj.samples.empty()) {
    const auto& last = traj.samples.back();
    os << "final_time: " << format_real(last.t) << '\n';
    os << "final_x:";
    for (double v : last.x) os << ' ' << format_real(v);
    os << '\n';
    double max_u = 0.0;
    for (const auto& s : traj.samples) max_u = std::max(max_u, std::abs(s.u));
    os << "max_abs_u: " << format_real(max_u) << '\n';
  }
  os << "max_residual: " << format_real(traj.max_residual) << '\n';
  os << "envelope_lambda: " << format_real(rep.lambda) << '\n';
  os << "envelope_N: " << format_real(rep.envelope.N) << '\n';
  for (const auto& m : rep.monitors)
    os << "monitor " << m.name << ": " << (m.passed ? "pass" : "FAIL") << " (" << m.detail << ")\n";
  os << "result: " << (rep.passed() ? "pass" : "FAIL") << '\n';
}

inline void write_comparison_csv(const ComparisonTable& table, std::ostream& os) {
  os << "label,settling_time,peak_abs_x1,max_abs_u";
  for (double lam : table.spec.lambdas) os << ",N_lambda_" << lam;
  os << '\n';
  for (const auto& r : table.rows) {
    os << r.label << ',' << format_real(r.settling_time) << ',' << format_real(r.peak_x1) << ','
       << format_real(r.max_u);
    for (double n : r.envelope_N) os << ',' << format_real(n);
    os << '\n';
  }
}

}  // namespace expctl
