#pragma once

// Scalar designs for x' = b u + a x^2 with state scaling s = e^{lambda t} x.
//   A: constant a, b = 1
//   B: time-varying a with |a(t) - l_a| < delta_a, b = 1
//   C: time-varying a, unknown b, Nussbaum gain

#include <array>
#include <cmath>
#include <span>
#include <string>

#include "expctl/errors.hpp"
#include "expctl/nussbaum.hpp"

namespace expctl {

// phi(x) = x^2 with the single unknown parameter a.
struct ScalarRegressor {
  static constexpr int kStates = 1;
  static constexpr int kParams = 1;

  template <class T>
  std::array<T, 1> phi(int, std::span<const T> x) const {
    return {x[0] * x[0]};
  }
};

struct ScalarGains {
  double k = 1.0;
  double lambda = 0.6;
  double gamma_a = 1.0;
  double delta_a = 0.0;
  NussbaumSpec nussbaum = NussbaumSpec::sin_exp_square();
};

struct ScalarState {
  double x = 0.0;
  double a_hat = 0.0;
  double xi = 0.0;
  double t = 0.0;
  double mu = 1.0;
  double s = 0.0;
};

inline ScalarState make_scalar_state(double x, double a_hat, double xi, double t, double lambda) {
  ScalarState st{x, a_hat, xi, t, std::exp(lambda * t), 0.0};
  st.s = st.mu * x;
  return st;
}

inline void validate_scalar_gains(const ScalarGains& g) {
  if (!(g.k > 0.0) || !std::isfinite(g.k)) throw ConfigError("scalar gain k must be positive");
  if (!(g.lambda >= 0.0) || !std::isfinite(g.lambda)) throw ConfigError("lambda must be >= 0");
  if (!(g.gamma_a > 0.0) || !std::isfinite(g.gamma_a)) throw ConfigError("gamma_a must be positive");
  if (!(g.delta_a >= 0.0) || !std::isfinite(g.delta_a)) throw ConfigError("delta_a must be >= 0");
}

struct ScalarLawOutput {
  double u = 0.0;
  double a_hat_dot = 0.0;
  double a_hat_dot_alt = 0.0;  // gamma_a x s^2
};

struct NussbaumLawOutput {
  double u = 0.0;
  double u_bar = 0.0;
  double kappa = 0.0;
  double nussbaum = 0.0;
  double a_hat_dot = 0.0;
  double xi_dot = 0.0;
  double xi_dot_alt = 0.0;  // (k + lambda + kappa) s^2
};

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite ") + what + " in scalar law");
}

inline void require_finite_state(const ScalarState& st) {
  require_finite(st.x, "x");
  require_finite(st.a_hat, "a_hat");
  require_finite(st.mu, "mu");
  require_finite(st.s, "s");
}

}  // namespace detail

inline ScalarLawOutput scalar_A_law(const ScalarState& st, const ScalarGains& g) {
  detail::require_finite_state(st);
  ScalarLawOutput out;
  out.u = -(g.k + g.lambda) * st.x - st.a_hat * st.x * st.x;
  out.a_hat_dot = g.gamma_a * st.mu * st.s * st.x * st.x;
  out.a_hat_dot_alt = g.gamma_a * st.x * st.s * st.s;
  detail::require_finite(out.u, "u");
  detail::require_finite(out.a_hat_dot, "a_hat_dot");
  return out;
}

// A plus the damping -(delta/2) x^3 - (delta/2) x against the parameter drift.
inline ScalarLawOutput scalar_B_law(const ScalarState& st, const ScalarGains& g) {
  ScalarLawOutput out = scalar_A_law(st, g);
  const double half = 0.5 * g.delta_a;
  out.u += -half * st.x * st.x * st.x - half * st.x;
  detail::require_finite(out.u, "u");
  return out;
}

inline double scalar_kappa(double a_hat, double x, double delta_a) {
  const double ax = a_hat * x;
  return 0.5 * (ax * ax + 1.0) + 0.5 * delta_a * (x * x + 1.0);
}

inline NussbaumLawOutput scalar_C_law(const ScalarState& st, const ScalarGains& g) {
  detail::require_finite_state(st);
  NussbaumLawOutput out;
  out.kappa = scalar_kappa(st.a_hat, st.x, g.delta_a);
  out.u_bar = (g.k + g.lambda) * st.x + out.kappa * st.x;
  out.nussbaum = evaluate(g.nussbaum, st.xi);
  out.u = out.nussbaum * out.u_bar;
  out.a_hat_dot = g.gamma_a * st.mu * st.s * st.x * st.x;
  out.xi_dot = st.mu * st.s * out.u_bar;
  out.xi_dot_alt = (g.k + g.lambda + out.kappa) * st.s * st.s;
  detail::require_finite(out.u, "u");
  detail::require_finite(out.xi_dot, "xi_dot");
  return out;
}

}  // namespace expctl
