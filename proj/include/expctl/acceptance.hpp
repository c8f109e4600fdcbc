#pragma once

// The acceptance suite: nine numbered criteria, each reported as one
// pass/fail line with the measured quantities.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "expctl/analysis.hpp"
#include "expctl/nussbaum.hpp"
#include "expctl/runner.hpp"
#include "expctl/scenarios.hpp"

namespace expctl {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

struct AcceptanceOptions {
  double wing_rock_step = 1e-4;
  double wing_rock_horizon = 15.0;
  int scalar_draws = 50;
  int random_states = 100;
  std::uint64_t seed = 20240601;
  std::function<void(const CriterionResult&)> on_result;
};

struct SensitivityReport {
  double worst_relative = 0.0;
  int layer = 0;
  std::string variable;
};

// Central differences of alpha_M (value path only, evaluated in long double
// so that rounding noise ~eps |alpha| / h stays far below the tolerance)
// against the propagated partials. The relative error uses max(|fd|, floor)
// as denominator, with floor = 1e-6 times the largest |partial| of the same
// alpha at that state.
template <RegressorType R, int M>
void check_layer_sensitivities(const BacksteppingEngine<R>& engine, std::mt19937_64& rng, int count,
                               double fd_step, SensitivityReport& rep) {
  constexpr int Q = R::kParams;
  using Wide = long double;
  std::uniform_real_distribution<double> dx(-1.5, 1.5);
  std::uniform_real_distribution<double> dth(0.0, 1.0);
  std::uniform_real_distribution<double> dmu(1.0, 5.0);
  auto alpha = [&](const std::array<double, M>& x, const std::array<double, Q>& th, double mu, int which,
                   double shift) {
    std::array<Wide, M> xw;
    std::array<Wide, Q> tw;
    for (int j = 0; j < M; ++j) xw[j] = x[j];
    for (int r = 0; r < Q; ++r) tw[r] = th[r];
    Wide mw = mu;
    if (which < M) xw[which] += shift;
    else if (which < M + Q) tw[which - M] += shift;
    else mw += shift;
    return engine.template alpha_value<M, Wide>(xw, tw, mw);
  };
  auto central = [&](const std::array<double, M>& x, const std::array<double, Q>& th, double mu, int which) {
    return static_cast<double>((alpha(x, th, mu, which, fd_step) - alpha(x, th, mu, which, -fd_step)) /
                               (2.0L * fd_step));
  };
  for (int k = 0; k < count; ++k) {
    std::array<double, M> x;
    std::array<double, Q> th;
    for (auto& v : x) v = dx(rng);
    for (auto& v : th) v = dth(rng);
    const double mu = dmu(rng);
    const auto top = engine.template layers_at<M>(x, th, mu)[M - 1];

    std::vector<std::pair<std::string, std::pair<double, double>>> pairs;  // name, (propagated, fd)
    for (int j = 0; j < M; ++j) pairs.push_back({"x_" + std::to_string(j + 1), {top.dalpha_dx[j], central(x, th, mu, j)}});
    for (int r = 0; r < Q; ++r)
      pairs.push_back({"theta_hat_" + std::to_string(r + 1), {top.dalpha_dtheta[r], central(x, th, mu, M + r)}});
    pairs.push_back({"mu", {top.dalpha_dmu, central(x, th, mu, M + Q)}});

    double scale = 0.0;
    for (const auto& p : pairs) scale = std::max(scale, std::abs(p.second.first));
    const double floor = std::max(1e-6 * scale, 1e-300);
    for (const auto& p : pairs) {
      const double rel = std::abs(p.second.first - p.second.second) / std::max(std::abs(p.second.second), floor);
      if (rel > rep.worst_relative) {
        rep.worst_relative = rel;
        rep.layer = M;
        rep.variable = p.first;
      }
    }
  }
}

template <RegressorType R>
SensitivityReport check_sensitivities(const BacksteppingEngine<R>& engine, std::mt19937_64& rng, int count,
                                      double fd_step = 1e-6) {
  SensitivityReport rep;
  [&]<int... Ms>(std::integer_sequence<int, Ms...>) {
    (check_layer_sensitivities<R, Ms + 1>(engine, rng, count, fd_step, rep), ...);
  }(std::make_integer_sequence<int, R::kStates - 1>{});
  return rep;
}

// Worst relative difference of (u, rho_hat_dot, theta_hat_dot) between the
// scaled engine at mu = 1 and the unscaled engine, both with lambda = 0.
template <RegressorType R>
double reduction_gap(const GainConfig<R::kStates, R::kParams>& base, std::mt19937_64& rng, int count) {
  constexpr int N = R::kStates;
  constexpr int Q = R::kParams;
  auto g = base;
  g.lambda = 0.0;
  BacksteppingEngine<R, true> scaled(R{}, g);
  BacksteppingEngine<R, false> plain(R{}, g);
  std::uniform_real_distribution<double> dx(-1.5, 1.5);
  std::uniform_real_distribution<double> dth(0.0, 1.0);
  std::uniform_real_distribution<double> drho(0.1, 2.0);
  double worst = 0.0;
  auto rel = [](double a, double b) { return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
  for (int k = 0; k < count; ++k) {
    std::array<double, N> x;
    AdaptiveState<Q> a;
    for (auto& v : x) v = dx(rng);
    for (auto& v : a.theta_hat) v = dth(rng);
    a.rho_hat = g.sign_b * drho(rng);
    const auto p = scaled.control_theorem1(x, a, 1.0);
    const auto q = plain.control_theorem1(x, a, 1.0);
    worst = std::max({worst, rel(p.u, q.u), rel(p.rho_hat_dot, q.rho_hat_dot)});
    for (int r = 0; r < Q; ++r) worst = std::max(worst, rel(p.theta_hat_dot[r], q.theta_hat_dot[r]));
  }
  return worst;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

inline double max_abs_u(const Trajectory& t) {
  double m = 0.0;
  for (const auto& s : t.samples) m = std::max(m, std::abs(s.u));
  return m;
}

inline std::vector<double> terminal_state(const Trajectory& t) {
  const auto& s = t.samples.back();
  std::vector<double> y = s.x;
  y.insert(y.end(), s.theta_hat.begin(), s.theta_hat.end());
  y.push_back(s.adaptive);
  return y;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {}) {
  using detail::fmt;
  std::vector<CriterionResult> results;
  auto report = [&](CriterionResult r) {
    if (opt.on_result) opt.on_result(r);
    results.push_back(std::move(r));
  };
  double worst_residual = 0.0;
  auto note_residual = [&](const Trajectory& t) { worst_residual = std::max(worst_residual, t.max_residual); };

  auto wing = [&](ControllerVariant v, double step) {
    auto sc = build_wing_rock(v);
    sc.sim.step = step;
    sc.sim.horizon = opt.wing_rock_horizon;
    return sc;
  };

  // 1. Known-direction wing rock.
  const auto sc1 = wing(ControllerVariant::Theorem1, opt.wing_rock_step);
  auto start = std::chrono::steady_clock::now();
  const Trajectory t1 = run_scenario(sc1);
  const double t1_seconds = detail::seconds_since(start);
  note_residual(t1);
  {
    CriterionResult r{1, "wing-rock theorem1 run", false, ""};
    const auto env = fit_envelope(t1, 0.6);
    const double umax = detail::max_abs_u(t1);
    const auto rho = t1.adaptive_series();
    const double rho_max = rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
    double tail = 0.0;
    if (t1.completed())
      for (int j = 0; j < t1.q; ++j) tail = std::max(tail, detect_limit(t1.times(), t1.estimate(j), 10.0, 1e-3).tail_range);
    r.passed = t1.completed() && env.holds && std::isfinite(umax) && rho_max <= sc1.initial.rho_hat && tail < 1e-3 &&
               t1_seconds <= 60.0;
    r.detail = std::string("status ") + to_string(t1.status) + ", N " + fmt(env.N) + ", max|u| " + fmt(umax) +
               ", max rho_hat " + fmt(rho_max) + ", theta_hat tail range " + fmt(tail) + ", runtime " +
               fmt(t1_seconds) + " s";
    report(r);
  }

  // 2. Nussbaum wing rock.
  const auto sc2 = wing(ControllerVariant::Theorem2, opt.wing_rock_step);
  const Trajectory t2 = run_scenario(sc2);
  note_residual(t2);
  {
    CriterionResult r{2, "wing-rock theorem2 run", false, ""};
    const auto xi = t2.adaptive_series();
    const auto mono = check_monotone(xi, 0.0);
    const bool steps_ok = t2.min_adaptive_increment >= 0.0;
    const double xi_end = xi.empty() ? 0.0 : xi.back();
    const auto env = fit_envelope(t2, 0.6);
    double xT = std::numeric_limits<double>::infinity();
    if (!t2.samples.empty()) {
      xT = 0.0;
      for (double v : t2.samples.back().x) xT += v * v;
      xT = std::sqrt(xT);
    }
    r.passed = t2.completed() && mono.monotone && steps_ok && xi_end < sc2.gains.nussbaum.xi_max && env.holds &&
               xT < 1e-3;
    r.detail = std::string("status ") + to_string(t2.status) + ", xi(T) " + fmt(xi_end) + ", min xi step " +
               fmt(t2.min_adaptive_increment) + ", N " + fmt(env.N) + ", |x(T)| " + fmt(xT);
    report(r);
  }

  // 3. Comparison with the lambda = 0 baseline.
  const auto sc0 = wing(ControllerVariant::BaselineLambda0, opt.wing_rock_step);
  const Trajectory t0 = run_scenario(sc0);
  note_residual(t0);
  {
    CriterionResult r{3, "baseline comparison", false, ""};
    try {
      const auto table = compare_runs({t1, t2, t0});
      const auto& r1 = table.row(t1.label);
      const auto& r2 = table.row(t2.label);
      const auto& rb = table.row(t0.label);
      r.passed = t0.completed() && r1.settling_time < rb.settling_time && r2.max_u > r1.max_u;
      r.detail = "settling theorem1 " + fmt(r1.settling_time) + " s vs baseline " + fmt(rb.settling_time) +
                 " s, max|u| theorem2 " + fmt(r2.max_u) + " vs theorem1 " + fmt(r1.max_u);
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    report(r);
  }

  // 4. Lyapunov descent with the congealed constants as hints.
  {
    CriterionResult r{4, "Lyapunov descent (theorem1)", false, ""};
    if (t1.completed()) {
      const ProbeGrid grid{0.0, sc1.sim.horizon, 1e-4};
      const auto lt = mean_theta(sc1.model, grid);
      const double lb = mean_b(sc1.model, grid);
      const auto v = lyapunov_known_direction(t1, sc1.gains.gamma, sc1.gains.gamma_rho, {lt.begin(), lt.end()}, lb);
      const auto d = check_descent(v, 1e-6);
      r.passed = d.descending;
      r.detail = "V(0) " + fmt(v.front()) + ", V(T) " + fmt(v.back()) + ", violations " +
                 std::to_string(d.violations) + ", worst excess " + fmt(d.worst_excess);
    } else {
      r.detail = "theorem1 run did not complete";
    }
    report(r);
  }

  // 5. Scalar suites.
  {
    CriterionResult r{5, "scalar suites A/B/C", true, ""};
    start = std::chrono::steady_clock::now();
    int failures = 0;
    std::string first;
    int idx = 0;
    for (auto v : {ControllerVariant::ScalarA, ControllerVariant::ScalarB, ControllerVariant::ScalarC}) {
      const auto draws = scalar_draws(opt.scalar_draws, opt.seed + static_cast<std::uint64_t>(++idx));
      for (const auto& d : draws) {
        const auto sc = build_scalar(v, d.a, d.x0, v == ControllerVariant::ScalarC ? d.b : 1.0);
        const auto t = run_scenario(sc);
        bool ok = fit_envelope(t, sc.gains.lambda).holds;
        if (ok && v == ControllerVariant::ScalarC)
          ok = check_monotone(t.adaptive_series(), 0.0).monotone && t.min_adaptive_increment >= 0.0;
        if (!ok) {
          ++failures;
          if (first.empty())
            first = std::string(to_string(v)) + " a=" + fmt(d.a) + " x0=" + fmt(d.x0) + " b=" + fmt(sc.b) + " (" +
                    to_string(t.status) + ")";
        }
      }
    }
    const double secs = detail::seconds_since(start);
    r.passed = failures == 0 && secs <= 120.0;
    r.detail = std::to_string(3 * opt.scalar_draws) + " runs, failures " + std::to_string(failures) +
               (first.empty() ? "" : " (first: " + first + ")") + ", runtime " + fmt(secs) + " s";
    report(r);
  }

  // 6. Reduction identities.
  {
    CriterionResult r{6, "reduction identities", false, ""};
    std::mt19937_64 rng(opt.seed + 6);
    const double gap_wr = reduction_gap<WingRockRegressor>(build_wing_rock(ControllerVariant::Theorem1).gains, rng,
                                                           opt.random_states);
    const double gap_syn = reduction_gap<SyntheticRegressor>(
        build_synthetic(0, ControllerVariant::Theorem1).gains, rng, opt.random_states);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ua(-3.0, 3.0);
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    int mismatches = 0;
    ScalarGains g;
    g.delta_a = 0.0;
    for (int k = 0; k < opt.random_states; ++k) {
      const auto st = make_scalar_state(ux(rng), ua(rng), 0.0, ut(rng), g.lambda);
      const auto a = scalar_A_law(st, g);
      const auto b = scalar_B_law(st, g);
      if (a.u != b.u || a.a_hat_dot != b.a_hat_dot) ++mismatches;
    }
    r.passed = gap_wr <= 1e-12 && gap_syn <= 1e-12 && mismatches == 0;
    r.detail = "lambda=0 scaled vs unscaled: wing rock " + fmt(gap_wr) + ", synthetic " + fmt(gap_syn) +
               "; scalar B(delta=0) vs A mismatches " + std::to_string(mismatches);
    report(r);
  }

  // 9 runs before 7 so that its residuals count toward the kernel check.
  const auto s1 = build_synthetic(0, ControllerVariant::Theorem1);
  const auto s2 = build_synthetic(0, ControllerVariant::Theorem2);
  const Trajectory ts1 = run_scenario(s1);
  const Trajectory ts2 = run_scenario(s2);
  note_residual(ts1);
  note_residual(ts2);

  // 7. Numerical kernels.
  {
    CriterionResult r{7, "numerical kernels", false, ""};
    std::mt19937_64 rng(opt.seed + 7);
    const BacksteppingEngine<WingRockRegressor> e2(WingRockRegressor{}, sc1.gains);
    const BacksteppingEngine<SyntheticRegressor> e3(SyntheticRegressor{}, s1.gains);
    const auto fd2 = check_sensitivities(e2, rng, opt.random_states);
    const auto fd3 = check_sensitivities(e3, rng, opt.random_states);

    double halving = 0.0;
    std::string halving_detail;
    bool halving_ok = true;
    for (const auto* base : {&t1, &t2, &t0}) {
      const auto v = base == &t1 ? ControllerVariant::Theorem1
                                 : base == &t2 ? ControllerVariant::Theorem2 : ControllerVariant::BaselineLambda0;
      const auto half = run_scenario(wing(v, 0.5 * opt.wing_rock_step));
      note_residual(half);
      if (!half.completed() || !base->completed()) {
        halving_ok = false;
        continue;
      }
      const auto a = detail::terminal_state(*base);
      const auto b = detail::terminal_state(half);
      double d = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) d = std::max(d, std::abs(a[c] - b[c]));
      halving = std::max(halving, d);
      halving_detail += std::string(halving_detail.empty() ? "" : ", ") + to_string(v) + " " + fmt(d);
    }
    r.passed = fd2.worst_relative <= 1e-5 && fd3.worst_relative <= 1e-5 && worst_residual <= 1e-8 && halving_ok &&
               halving <= 1e-5;
    r.detail = "FD rel. error n=2 " + fmt(fd2.worst_relative) + ", n=3 " + fmt(fd3.worst_relative) + " (layer " +
               std::to_string(fd3.layer) + ", " + fd3.variable + "); max residual " + fmt(worst_residual) +
               "; step halving " + halving_detail;
    report(r);
  }

  // 8. Nussbaum verifier.
  {
    CriterionResult r{8, "Nussbaum verifier", false, ""};
    const auto grid = uniform_grid(6.0, 1000);
    const auto good = verify_enhanced(NussbaumSpec::sin_exp_square(), grid);
    const auto one = verify_enhanced(nussbaum_from_name("constant-one"), grid);
    const auto id = verify_enhanced(nussbaum_from_name("identity"), grid);
    r.passed = good.passed() && !one.passed() && !id.passed();
    r.detail = std::string("sin-exp-square ") + (good.passed() ? "passes" : "fails") + ", constant-one " +
               (one.passed() ? "passes" : "fails") + ", identity " + (id.passed() ? "passes" : "fails");
    report(r);
  }

  // 9. Third-order synthetic plant.
  {
    CriterionResult r{9, "synthetic n=3 runs", false, ""};
    const auto rep1 = evaluate_run(AnyScenario(s1), ts1);
    const auto rep2 = evaluate_run(AnyScenario(s2), ts2);
    const auto e1 = fit_envelope(ts1, 0.3);
    const auto e2 = fit_envelope(ts2, 0.3);
    r.passed = e1.holds && e2.holds && rep1.passed() && rep2.passed();
    r.detail = "theorem1 N " + fmt(e1.N) + ", theorem2 N " + fmt(e2.N);
    for (const auto* rep : {&rep1, &rep2})
      for (const auto& m : rep->monitors)
        if (!m.passed) r.detail += "; " + rep->scenario + " monitor " + m.name + " failed (" + m.detail + ")";
    report(r);
  }

  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return results;
}

inline std::string format_criterion(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " " + r.title + ": " +
         r.detail;
}

}  // namespace expctl
