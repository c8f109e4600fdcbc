#pragma once

// Closed-loop integration: classical RK4 with a fixed step on a grid that
// contains every parameter breakpoint, or RK4 under step-doubling error
// control that never steps across a breakpoint. Controller states are
// integrated together with the plant and u is evaluated inside each stage.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "expctl/backstepping.hpp"
#include "expctl/errors.hpp"
#include "expctl/model.hpp"
#include "expctl/scalar.hpp"

namespace expctl {

enum class RunStatus { Completed, Diverged, NussbaumOverflow, FactorizationFailure, DomainError };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::NussbaumOverflow: return "nussbaum-overflow";
    case RunStatus::FactorizationFailure: return "factorization-failure";
    case RunStatus::DomainError: return "domain-error";
  }
  return "unknown";
}

enum class ControllerVariant { ScalarA, ScalarB, ScalarC, Theorem1, Theorem2, BaselineLambda0 };

inline const char* to_string(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::ScalarA: return "scalar-A";
    case ControllerVariant::ScalarB: return "scalar-B";
    case ControllerVariant::ScalarC: return "scalar-C";
    case ControllerVariant::Theorem1: return "theorem1";
    case ControllerVariant::Theorem2: return "theorem2";
    case ControllerVariant::BaselineLambda0: return "baseline-lambda0";
  }
  return "unknown";
}

struct Sample {
  double t = 0.0;
  std::vector<double> x;
  double u = 0.0;
  std::vector<double> theta_hat;
  double adaptive = 0.0;  // rho_hat or xi
  double mu = 1.0;
  std::vector<double> diagnostics;
};

struct Trajectory {
  int n = 0;
  int q = 0;
  std::string label;
  std::string adaptive_name = "none";
  std::vector<std::string> diagnostic_names;
  std::vector<Sample> samples;

  RunStatus status = RunStatus::Completed;
  double failure_time = std::numeric_limits<double>::quiet_NaN();
  std::string message;
  std::size_t steps = 0;
  double max_residual = 0.0;  // over every stage of every accepted step
  // min over accepted steps of adaptive(t_{k+1}) - adaptive(t_k)
  double min_adaptive_increment = std::numeric_limits<double>::infinity();

  bool completed() const { return status == RunStatus::Completed; }

  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.t);
    return out;
  }
  std::vector<double> state(int i) const {  // 0-based
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.x.at(i));
    return out;
  }
  std::vector<double> inputs() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.u);
    return out;
  }
  std::vector<double> estimate(int r) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.theta_hat.at(r));
    return out;
  }
  std::vector<double> adaptive_series() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.adaptive);
    return out;
  }
  int diagnostic_index(const std::string& name) const {
    for (std::size_t k = 0; k < diagnostic_names.size(); ++k)
      if (diagnostic_names[k] == name) return static_cast<int>(k);
    return -1;
  }
  std::vector<double> diagnostic(const std::string& name) const {
    const int idx = diagnostic_index(name);
    if (idx < 0) throw ConfigError("no diagnostic column '" + name + "'");
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.diagnostics.at(idx));
    return out;
  }
};

enum class StepControl {
  Fixed,         // RK4 on the breakpoint-aligned grid with step `step`
  StepDoubling,  // RK4 with step-doubling error control, steps capped at `step`
};

struct SimOptions {
  double horizon = 15.0;
  double step = 1e-4;
  int record_every = 1;
  double divergence_bound = 1e12;
  double residual_tolerance = 1e-8;
  StepControl control = StepControl::Fixed;
  double rel_tol = 1e-9;  // StepDoubling only
  double abs_tol = 1e-12;
  double min_step = 1e-14;
};

// Each interval between consecutive breakpoints is split into ceil(len / h)
// equal steps, so no step straddles a jump.
inline std::vector<double> make_time_grid(double t0, double t1, double h, std::vector<double> breakpoints) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step must be positive");
  if (!(t1 > t0) || !std::isfinite(t1)) throw ConfigError("horizon must be positive");
  std::vector<double> knots{t0};
  std::sort(breakpoints.begin(), breakpoints.end());
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  for (double b : breakpoints)
    if (b > knots.back() + eps && b < t1 - eps) knots.push_back(b);
  knots.push_back(t1);

  std::vector<double> grid{t0};
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    const auto pieces = static_cast<long>(std::ceil((b - a) / h - 1e-9));
    for (long p = 1; p < pieces; ++p) grid.push_back(a + (b - a) * static_cast<double>(p) / pieces);
    grid.push_back(b);
  }
  return grid;
}

namespace detail {

struct Rk4Work {
  std::vector<double> k2, k3, k4, tmp;
  explicit Rk4Work(int dim) : k2(dim), k3(dim), k4(dim), tmp(dim) {}
};

// One RK4 step from (t, y) with the first stage k1 already known. Returns the
// largest factorization residual among the remaining stages.
template <class Loop>
double rk4_step(const Loop& loop, double t, double h, const std::vector<double>& y,
                const std::vector<double>& k1, std::vector<double>& out, Rk4Work& w) {
  const std::size_t dim = y.size();
  double res = 0.0;
  for (std::size_t c = 0; c < dim; ++c) w.tmp[c] = y[c] + 0.5 * h * k1[c];
  res = std::max(res, loop.derivative(t + 0.5 * h, w.tmp, Side::Right, w.k2, nullptr));
  for (std::size_t c = 0; c < dim; ++c) w.tmp[c] = y[c] + 0.5 * h * w.k2[c];
  res = std::max(res, loop.derivative(t + 0.5 * h, w.tmp, Side::Right, w.k3, nullptr));
  for (std::size_t c = 0; c < dim; ++c) w.tmp[c] = y[c] + h * w.k3[c];
  res = std::max(res, loop.derivative(t + h, w.tmp, Side::Left, w.k4, nullptr));
  for (std::size_t c = 0; c < dim; ++c)
    out[c] = y[c] + h / 6.0 * (k1[c] + 2.0 * w.k2[c] + 2.0 * w.k3[c] + w.k4[c]);
  return res;
}

inline bool within_bound(const std::vector<double>& y, double bound) {
  for (double v : y)
    if (!std::isfinite(v) || std::abs(v) > bound) return false;
  return true;
}

}  // namespace detail

// ClosedLoop contract:
//   int dimension() const;
//   std::vector<double> initial_state() const;
//   std::vector<double> breakpoints(double t0, double t1) const;
//   void header(Trajectory&) const;
//   int monotone_index() const;   // component tracked for min increment, -1 for none
//   double derivative(double t, std::span<const double> y, Side side,
//                     std::span<double> dy, Sample* record) const;  // returns residual
template <class Loop>
Trajectory simulate(const Loop& loop, const SimOptions& opt) {
  if (opt.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(opt.divergence_bound > 0.0)) throw ConfigError("divergence bound must be positive");
  Trajectory traj;
  loop.header(traj);
  const auto grid = make_time_grid(0.0, opt.horizon, opt.step, loop.breakpoints(0.0, opt.horizon));
  const int dim = loop.dimension();
  std::vector<double> y = loop.initial_state();
  if (static_cast<int>(y.size()) != dim) throw ConfigError("initial state has the wrong dimension");
  std::vector<double> k1(dim), next(dim), half(dim), k1_half(dim), coarse(dim);
  detail::Rk4Work work(dim);
  const int mono = loop.monotone_index();

  double t = 0.0;
  auto track_residual = [&](double r) {
    traj.max_residual = std::max(traj.max_residual, r);
    if (!(r <= opt.residual_tolerance))
      throw FactorizationError("factorization residual " + std::to_string(r) + " exceeds tolerance");
  };
  auto accept = [&](double t_next) {
    if (mono >= 0) traj.min_adaptive_increment = std::min(traj.min_adaptive_increment, next[mono] - y[mono]);
    y.swap(next);
    t = t_next;
    ++traj.steps;
  };
  auto diverged = [&](double when) {
    traj.status = RunStatus::Diverged;
    traj.failure_time = when;
    traj.message = "state left the divergence bound";
  };

  try {
    if (opt.control == StepControl::Fixed) {
      traj.samples.reserve(grid.size() / opt.record_every + 2);
      for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        t = grid[k];
        const bool keep = k % opt.record_every == 0;
        Sample rec;
        track_residual(loop.derivative(t, y, Side::Right, k1, keep ? &rec : nullptr));
        if (keep) traj.samples.push_back(std::move(rec));
        track_residual(detail::rk4_step(loop, t, grid[k + 1] - t, y, k1, next, work));
        if (!detail::within_bound(next, opt.divergence_bound)) {
          diverged(grid[k + 1]);
          return traj;
        }
        accept(grid[k + 1]);
      }
    } else {
      // Knots are the grid points that are breakpoints or the horizon.
      std::vector<double> knots = loop.breakpoints(0.0, opt.horizon);
      std::sort(knots.begin(), knots.end());
      knots.push_back(opt.horizon);
      std::size_t knot = 0;
      const double eps = 1e-12 * std::max(1.0, opt.horizon);
      double h = opt.step;
      std::size_t accepted = 0;
      while (t < opt.horizon - eps) {
        while (knots[knot] <= t + eps) ++knot;
        const bool keep = accepted % opt.record_every == 0;
        Sample rec;
        track_residual(loop.derivative(t, y, Side::Right, k1, keep ? &rec : nullptr));
        for (;;) {
          h = std::min({h, opt.step, knots[knot] - t});
          double err = std::numeric_limits<double>::infinity();
          double res = 0.0;
          try {
            res = detail::rk4_step(loop, t, h, y, k1, coarse, work);
            res = std::max(res, detail::rk4_step(loop, t, 0.5 * h, y, k1, half, work));
            res = std::max(res, loop.derivative(t + 0.5 * h, half, Side::Right, k1_half, nullptr));
            res = std::max(res, detail::rk4_step(loop, t + 0.5 * h, 0.5 * h, half, k1_half, next, work));
            if (detail::within_bound(next, opt.divergence_bound) && detail::within_bound(coarse, 1e300)) {
              err = 0.0;
              for (int c = 0; c < dim; ++c) {
                const double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[c]), std::abs(next[c]));
                err = std::max(err, std::abs(next[c] - coarse[c]) / 15.0 / scale);
              }
            }
          } catch (const OverflowGuardError&) {
            // A trial stage beyond the guard is treated like a large error.
          } catch (const DomainError&) {
          }
          if (err <= 1.0) {
            track_residual(res);
            const double t_next = knots[knot] - t - h <= eps ? knots[knot] : t + h;
            if (keep) traj.samples.push_back(std::move(rec));
            accept(t_next);
            ++accepted;
            h *= err > 0.0 ? std::min(4.0, 0.9 * std::pow(err, -0.2)) : 4.0;
            break;
          }
          h *= std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.1;
          if (h < opt.min_step) {
            // Reproduce the failure at the smallest step to classify it.
            detail::rk4_step(loop, t, opt.min_step, y, k1, next, work);
            if (!detail::within_bound(next, opt.divergence_bound)) {
              diverged(t);
              return traj;
            }
            throw DomainError("step size underflow at t = " + std::to_string(t));
          }
        }
      }
    }
    t = opt.horizon;
    Sample last;
    track_residual(loop.derivative(t, y, Side::Right, k1, &last));
    traj.samples.push_back(std::move(last));
  } catch (const OverflowGuardError& e) {
    traj.status = RunStatus::NussbaumOverflow;
    traj.failure_time = t;
    traj.message = e.what();
  } catch (const FactorizationError& e) {
    traj.status = RunStatus::FactorizationFailure;
    traj.failure_time = t;
    traj.message = e.what();
  } catch (const DomainError& e) {
    traj.status = RunStatus::DomainError;
    traj.failure_time = t;
    traj.message = e.what();
  }
  return traj;
}

// Plant without a controller: x' = f(t, x).
class OpenLoop {
 public:
  using Field = std::function<void(double, std::span<const double>, std::span<double>)>;

  OpenLoop(std::vector<double> x0, Field f, std::string label = "open-loop")
      : x0_(std::move(x0)), f_(std::move(f)), label_(std::move(label)) {}

  int dimension() const { return static_cast<int>(x0_.size()); }
  std::vector<double> initial_state() const { return x0_; }
  std::vector<double> breakpoints(double, double) const { return {}; }
  int monotone_index() const { return -1; }
  void header(Trajectory& traj) const {
    traj.n = dimension();
    traj.q = 0;
    traj.label = label_;
  }
  double derivative(double t, std::span<const double> y, Side, std::span<double> dy, Sample* rec) const {
    f_(t, y, dy);
    if (rec) {
      rec->t = t;
      rec->x.assign(y.begin(), y.end());
    }
    return 0.0;
  }

 private:
  std::vector<double> x0_;
  Field f_;
  std::string label_;
};

// Strict-feedback plant driven by the known-direction or Nussbaum law.
template <RegressorType Regressor, bool Scaled = true>
class BacksteppingLoop {
 public:
  static constexpr int N = Regressor::kStates;
  static constexpr int Q = Regressor::kParams;
  using Engine = BacksteppingEngine<Regressor, Scaled>;

  BacksteppingLoop(SystemModel<Regressor> model, const GainConfig<N, Q>& gains, bool known_direction,
                   std::array<double, N> x0, AdaptiveState<Q> a0, std::string label)
      : model_(std::move(model)),
        engine_(model_.regressor, gains),
        known_direction_(known_direction),
        x0_(x0),
        a0_(a0),
        label_(std::move(label)) {
    check_initial_estimates<Q>(a0_.theta_hat, a0_.rho_hat, gains.sign_b, known_direction_);
    if (!known_direction_ && !(a0_.xi >= 0.0)) throw ConfigError("xi(0) must be non-negative");
  }

  const Engine& engine() const { return engine_; }
  const SystemModel<Regressor>& model() const { return model_; }

  int dimension() const { return N + Q + 1; }
  std::vector<double> initial_state() const {
    std::vector<double> y(x0_.begin(), x0_.end());
    y.insert(y.end(), a0_.theta_hat.begin(), a0_.theta_hat.end());
    y.push_back(known_direction_ ? a0_.rho_hat : a0_.xi);
    return y;
  }
  std::vector<double> breakpoints(double t0, double t1) const { return model_.breakpoints(t0, t1); }
  int monotone_index() const { return known_direction_ ? -1 : N + Q; }
  void header(Trajectory& traj) const {
    traj.n = N;
    traj.q = Q;
    traj.label = label_;
    traj.adaptive_name = known_direction_ ? "rho_hat" : "xi";
    traj.diagnostic_names.clear();
    for (int i = 1; i <= N; ++i) traj.diagnostic_names.push_back("s_" + std::to_string(i));
    traj.diagnostic_names.push_back("kappa");
    for (int i = 1; i <= N; ++i) traj.diagnostic_names.push_back("zeta_" + std::to_string(i));
    traj.diagnostic_names.push_back("residual");
  }

  double derivative(double t, std::span<const double> y, Side side, std::span<double> dy,
                    Sample* rec) const {
    std::array<double, N> x;
    AdaptiveState<Q> a;
    for (int i = 0; i < N; ++i) x[i] = y[i];
    for (int r = 0; r < Q; ++r) a.theta_hat[r] = y[N + r];
    if (known_direction_)
      a.rho_hat = y[N + Q];
    else
      a.xi = y[N + Q];
    const double mu = Scaled ? std::exp(engine_.gains().lambda * t) : 1.0;
    const auto params = eval_parameters(model_, t, side);

    typename Engine::Evaluation eval;
    std::array<double, Q> theta_hat_dot;
    double u = 0.0;
    double adaptive_dot = 0.0;
    if (known_direction_) {
      auto out = engine_.control_theorem1(x, a, mu);
      u = out.u;
      adaptive_dot = out.rho_hat_dot;
      theta_hat_dot = out.theta_hat_dot;
      eval = std::move(out.eval);
    } else {
      auto out = engine_.control_theorem2(x, a, mu);
      u = out.u;
      adaptive_dot = out.xi_dot;
      theta_hat_dot = out.theta_hat_dot;
      eval = std::move(out.eval);
    }
    for (int i = 0; i < N; ++i) {
      double f = 0.0;
      for (int r = 0; r < Q; ++r) f += eval.layers[i].phi[r] * params.theta[r];
      dy[i] = f + (i + 1 < N ? x[i + 1] : params.b * u);
    }
    for (int r = 0; r < Q; ++r) dy[N + r] = theta_hat_dot[r];
    dy[N + Q] = adaptive_dot;

    if (rec) {
      rec->t = t;
      rec->x.assign(x.begin(), x.end());
      rec->u = u;
      rec->theta_hat.assign(a.theta_hat.begin(), a.theta_hat.end());
      rec->adaptive = known_direction_ ? a.rho_hat : a.xi;
      rec->mu = mu;
      rec->diagnostics.clear();
      for (int i = 0; i < N; ++i) rec->diagnostics.push_back(eval.layers[i].s);
      rec->diagnostics.push_back(eval.kappa);
      for (int i = 0; i < N; ++i) rec->diagnostics.push_back(eval.layers[i].zeta);
      rec->diagnostics.push_back(eval.max_residual());
    }
    return eval.max_residual();
  }

 private:
  SystemModel<Regressor> model_;
  Engine engine_;
  bool known_direction_;
  std::array<double, N> x0_;
  AdaptiveState<Q> a0_;
  std::string label_;
};

// x' = b(t) u + a(t) x^2 under scalar design A, B or C. State (x, a_hat, xi).
class ScalarLoop {
 public:
  ScalarLoop(SystemModel<ScalarRegressor> plant, ControllerVariant variant, ScalarGains gains, double x0,
             double a_hat0, double xi0, std::string label)
      : plant_(std::move(plant)),
        variant_(variant),
        gains_(std::move(gains)),
        x0_(x0),
        a_hat0_(a_hat0),
        xi0_(xi0),
        label_(std::move(label)) {
    validate_scalar_gains(gains_);
    if (variant_ != ControllerVariant::ScalarA && variant_ != ControllerVariant::ScalarB &&
        variant_ != ControllerVariant::ScalarC)
      throw ConfigError("scalar loop needs a scalar controller variant");
    if (variant_ == ControllerVariant::ScalarC && !(xi0_ >= 0.0)) throw ConfigError("xi(0) must be non-negative");
  }

  int dimension() const { return 3; }
  std::vector<double> initial_state() const { return {x0_, a_hat0_, xi0_}; }
  std::vector<double> breakpoints(double t0, double t1) const { return plant_.breakpoints(t0, t1); }
  int monotone_index() const { return variant_ == ControllerVariant::ScalarC ? 2 : -1; }
  void header(Trajectory& traj) const {
    traj.n = 1;
    traj.q = 1;
    traj.label = label_;
    traj.adaptive_name = variant_ == ControllerVariant::ScalarC ? "xi" : "none";
    traj.diagnostic_names = {"s_1", "kappa"};
  }

  double derivative(double t, std::span<const double> y, Side side, std::span<double> dy,
                    Sample* rec) const {
    const ScalarState st = make_scalar_state(y[0], y[1], y[2], t, gains_.lambda);
    const auto params = eval_parameters(plant_, t, side);
    double u = 0.0;
    double kappa = 0.0;
    dy[2] = 0.0;
    if (variant_ == ControllerVariant::ScalarC) {
      const auto out = scalar_C_law(st, gains_);
      u = out.u;
      kappa = out.kappa;
      dy[1] = out.a_hat_dot;
      dy[2] = out.xi_dot;
    } else {
      const auto out =
          variant_ == ControllerVariant::ScalarA ? scalar_A_law(st, gains_) : scalar_B_law(st, gains_);
      u = out.u;
      dy[1] = out.a_hat_dot;
    }
    dy[0] = params.theta[0] * st.x * st.x + params.b * u;
    if (rec) {
      rec->t = t;
      rec->x = {st.x};
      rec->u = u;
      rec->theta_hat = {st.a_hat};
      rec->adaptive = variant_ == ControllerVariant::ScalarC ? st.xi : 0.0;
      rec->mu = st.mu;
      rec->diagnostics = {st.s, kappa};
    }
    return 0.0;
  }

 private:
  SystemModel<ScalarRegressor> plant_;
  ControllerVariant variant_;
  ScalarGains gains_;
  double x0_;
  double a_hat0_;
  double xi0_;
  std::string label_;
};

}  // namespace expctl
