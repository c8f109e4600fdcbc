#pragma once

// Canned experiments: the wing-rock roll model, seeded third-order polynomial
// plants and the scalar loops.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "expctl/backstepping.hpp"
#include "expctl/model.hpp"
#include "expctl/nussbaum.hpp"
#include "expctl/scalar.hpp"
#include "expctl/sim.hpp"

namespace expctl {

// phi_1 = 0, phi_2 = [x_1, x_2]
struct WingRockRegressor {
  static constexpr int kStates = 2;
  static constexpr int kParams = 2;

  template <class T>
  std::array<T, 2> phi(int i, std::span<const T> x) const {
    if (i == 1) return {T(0.0), T(0.0)};
    return {x[0], x[1]};
  }
};

// phi_1 = [x_1^2, 0], phi_2 = [x_1 x_2, x_2^2], phi_3 = [x_3^2, x_1 x_3]
struct SyntheticRegressor {
  static constexpr int kStates = 3;
  static constexpr int kParams = 2;

  template <class T>
  std::array<T, 2> phi(int i, std::span<const T> x) const {
    if (i == 1) return {x[0] * x[0], T(0.0)};
    if (i == 2) return {x[0] * x[1], x[1] * x[1]};
    return {x[2] * x[2], x[0] * x[2]};
  }
};

struct WingRockConstants {
  double theta1 = -26.6667;
  double theta2 = 0.67485;
  double variation = 0.02;  // theta_i (1 + 0.02 sgn(sin 3t))
  double omega = 3.0;
  double b_nominal = -2.0;
  double b_variation = 0.2;  // b = -2 + 0.2 sgn(sin 3t) cos t
  double delta_theta = 0.6;
  std::array<double, 2> k{1.0, 1.0};
  std::array<double, 2> theta_hat0{0.0, 0.0};
  double lambda = 0.6;
  double gamma = 0.001;  // Gamma = gamma * I
  std::array<double, 2> x0{-1.0, 2.5};
  double rho_hat0 = -0.3;
  double xi0 = 0.0;
  const char* nussbaum = "sin-exp-square";
};

inline constexpr WingRockConstants kWingRock{};

template <RegressorType R>
struct Scenario {
  static constexpr int N = R::kStates;
  static constexpr int Q = R::kParams;

  std::string name;
  ControllerVariant variant = ControllerVariant::Theorem1;
  SystemModel<R> model;
  GainConfig<N, Q> gains;
  std::array<double, N> x0{};
  AdaptiveState<Q> initial;
  SimOptions sim;
  ParameterBounds<Q> bounds;

  bool known_direction() const { return variant != ControllerVariant::Theorem2; }
};

inline SystemModel<WingRockRegressor> wing_rock_model(const WingRockConstants& c = kWingRock) {
  SystemModel<WingRockRegressor> m;
  m.name = "wing-rock";
  m.theta_signal = [c](double t, Side side) {
    const double sg = square_wave_sign(c.omega, t, side);
    return std::array<double, 2>{c.theta1 * (1.0 + c.variation * sg), c.theta2 * (1.0 + c.variation * sg)};
  };
  m.b_signal = [c](double t, Side side) {
    return c.b_nominal + c.b_variation * square_wave_sign(c.omega, t, side) * std::cos(t);
  };
  m.breakpoints = [c](double t0, double t1) { return square_wave_breakpoints(c.omega, t0, t1); };
  return m;
}

inline Scenario<WingRockRegressor> build_wing_rock(ControllerVariant variant) {
  if (variant != ControllerVariant::Theorem1 && variant != ControllerVariant::Theorem2 &&
      variant != ControllerVariant::BaselineLambda0)
    throw ConfigError(std::string("wing rock has no variant '") + to_string(variant) + "'");
  const auto& c = kWingRock;
  Scenario<WingRockRegressor> sc;
  sc.variant = variant;
  sc.name = variant == ControllerVariant::BaselineLambda0 ? "wing-rock-baseline"
                                                         : std::string("wing-rock-") + to_string(variant);
  sc.model = wing_rock_model(c);
  sc.gains.k = c.k;
  sc.gains.lambda = variant == ControllerVariant::BaselineLambda0 ? 0.0 : c.lambda;
  sc.gains.delta_theta = c.delta_theta;
  sc.gains.gamma = c.gamma * Eigen::Matrix2d::Identity();
  sc.gains.sign_b = c.b_nominal > 0 ? 1 : -1;
  sc.gains.nussbaum = nussbaum_from_name(c.nussbaum);
  sc.x0 = c.x0;
  sc.initial.theta_hat = c.theta_hat0;
  sc.initial.rho_hat = c.rho_hat0;
  sc.initial.xi = c.xi0;
  sc.sim.horizon = 15.0;
  sc.sim.step = 1e-4;
  sc.bounds.delta_theta = c.delta_theta;
  return sc;
}

// Nominal parameters, b < 0 and x(0) are drawn from the seed; the structure is fixed.
inline Scenario<SyntheticRegressor> build_synthetic(std::uint64_t seed, ControllerVariant variant) {
  if (variant != ControllerVariant::Theorem1 && variant != ControllerVariant::Theorem2)
    throw ConfigError(std::string("synthetic model has no variant '") + to_string(variant) + "'");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> nominal(-1.0, 1.0);
  std::uniform_real_distribution<double> gain(-2.0, -1.0);
  std::uniform_real_distribution<double> start(-1.0, 1.0);

  const std::array<double, 2> theta0{nominal(rng), nominal(rng)};
  const double b0 = gain(rng);
  constexpr double kOmega = 2.0;
  constexpr double kThetaSwing = 0.1;
  constexpr double kBSwing = 0.2;

  Scenario<SyntheticRegressor> sc;
  sc.variant = variant;
  sc.name = std::string("synthetic-") + to_string(variant);
  sc.model.name = "synthetic-n3-seed" + std::to_string(seed);
  sc.model.theta_signal = [theta0](double t, Side side) {
    const double sg = square_wave_sign(kOmega, t, side);
    return std::array<double, 2>{theta0[0] + kThetaSwing * sg, theta0[1] - kThetaSwing * sg};
  };
  sc.model.b_signal = [b0](double t, Side side) { return b0 * (1.0 + kBSwing * square_wave_sign(kOmega, t, side)); };
  sc.model.breakpoints = [](double t0, double t1) { return square_wave_breakpoints(kOmega, t0, t1); };

  sc.gains.k = {1.0, 1.0, 1.0};
  sc.gains.lambda = 0.3;
  sc.gains.delta_theta = 0.2;  // >= sqrt(2) * 0.1
  sc.gains.gamma = 0.01 * Eigen::Matrix2d::Identity();
  sc.gains.sign_b = -1;
  sc.gains.nussbaum = NussbaumSpec::sin_exp_square();
  // Layer integrands are polynomials in z of degree 0, 4 and at most 23, so 1, 3 and 12 nodes are exact.
  sc.gains.layer_nodes = {1, 3, 12};

  std::array<double, 3> x0{start(rng), start(rng), start(rng)};
  double norm = 0.0;
  for (double v : x0) norm += v * v;
  norm = std::sqrt(norm);
  constexpr double kStartRadius = 0.6;
  if (norm > kStartRadius)
    for (double& v : x0) v *= kStartRadius / norm;
  sc.x0 = x0;
  sc.initial.theta_hat = {0.0, 0.0};
  sc.initial.rho_hat = -0.5;
  sc.initial.xi = 0.0;
  sc.sim.horizon = 8.0;
  sc.sim.step = 5e-3;
  sc.bounds.delta_theta = sc.gains.delta_theta;
  return sc;
}

template <RegressorType R>
Trajectory run_scenario(const Scenario<R>& sc) {
  BacksteppingLoop<R> loop(sc.model, sc.gains, sc.known_direction(), sc.x0, sc.initial, sc.name);
  return simulate(loop, sc.sim);
}

struct ScalarScenario {
  std::string name;
  ControllerVariant variant = ControllerVariant::ScalarA;
  SystemModel<ScalarRegressor> plant;
  ScalarGains gains;
  double a_nominal = 0.0;
  double b = 1.0;
  double x0 = 0.0;
  double a_hat0 = 0.0;
  double xi0 = 0.0;
  SimOptions sim;
};

// A: constant a, b = 1. B: a(t) = a + 0.25 sgn(sin 2t), b = 1, delta_a = 0.5.
// C: same a(t) with the given constant b unknown to the controller.
inline ScalarScenario build_scalar(ControllerVariant variant, double a, double x0, double b = 1.0) {
  constexpr double kSwing = 0.25;
  constexpr double kOmega = 2.0;
  ScalarScenario sc;
  sc.variant = variant;
  sc.name = to_string(variant);
  sc.a_nominal = a;
  sc.x0 = x0;
  sc.gains.k = 1.0;
  sc.gains.lambda = 0.6;
  sc.gains.gamma_a = 1.0;
  sc.sim.horizon = 20.0;
  sc.sim.step = 1e-3;
  sc.plant.name = std::string("scalar-plant-") + to_string(variant);
  switch (variant) {
    case ControllerVariant::ScalarA:
      sc.b = 1.0;
      sc.gains.delta_a = 0.0;
      sc.plant.theta_signal = [a](double, Side) { return std::array<double, 1>{a}; };
      break;
    case ControllerVariant::ScalarB:
    case ControllerVariant::ScalarC:
      sc.b = variant == ControllerVariant::ScalarB ? 1.0 : b;
      sc.gains.delta_a = 2.0 * kSwing;
      sc.plant.theta_signal = [a](double t, Side side) {
        return std::array<double, 1>{a + kSwing * square_wave_sign(kOmega, t, side)};
      };
      sc.plant.breakpoints = [](double t0, double t1) { return square_wave_breakpoints(kOmega, t0, t1); };
      break;
    default:
      throw ConfigError(std::string("not a scalar variant: ") + to_string(variant));
  }
  if (variant == ControllerVariant::ScalarC) {
    // With b > 0 the Nussbaum search passes through a transient on a ~1e-9 s time scale.
    sc.sim.control = StepControl::StepDoubling;
    sc.sim.step = 1e-3;
  }
  const double bb = sc.b;
  sc.plant.b_signal = [bb](double, Side) { return bb; };
  return sc;
}

inline Trajectory run_scenario(const ScalarScenario& sc) {
  ScalarLoop loop(sc.plant, sc.variant, sc.gains, sc.x0, sc.a_hat0, sc.xi0, sc.name);
  return simulate(loop, sc.sim);
}

struct ScalarDraw {
  double a = 0.0;
  double x0 = 0.0;
  double b = 1.0;
};

// a in [-3, 3], x(0) in [-2, 2], b in {+1.5, -1.5}.
inline std::vector<ScalarDraw> scalar_draws(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> da(-3.0, 3.0);
  std::uniform_real_distribution<double> dx(-2.0, 2.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<ScalarDraw> out;
  for (int k = 0; k < count; ++k) {
    ScalarDraw d;
    d.a = da(rng);
    d.x0 = dx(rng);
    d.b = sign(rng) ? 1.5 : -1.5;
    out.push_back(d);
  }
  return out;
}

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "wing-rock-theorem1", "wing-rock-theorem2", "wing-rock-baseline", "synthetic-theorem1",
      "synthetic-theorem2", "scalar-A",           "scalar-B",           "scalar-C"};
  return names;
}

}  // namespace expctl
