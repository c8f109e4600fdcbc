#pragma once

// Strict-feedback plant with time-varying parameters:
//
//   x_i' = phi_i(x_1..x_i)^T theta(t) + x_{i+1},   i < n
//   x_n' = phi_n(x_1..x_n)^T theta(t) + b(t) u
//
// The regressor is a compile-time type so that it can be evaluated on any
// scalar type, including nested Dual numbers.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "expctl/errors.hpp"

namespace expctl {

// Which one-sided limit a piecewise signal returns at a breakpoint.
enum class Side { Right, Left };

template <class R>
concept RegressorType = requires(const R& r, std::span<const double> x) {
  { R::kStates } -> std::convertible_to<int>;
  { R::kParams } -> std::convertible_to<int>;
  { r.phi(1, x) } -> std::same_as<std::array<double, R::kParams>>;
};

template <RegressorType Regressor>
struct SystemModel {
  static constexpr int kStates = Regressor::kStates;
  static constexpr int kParams = Regressor::kParams;
  using ParamVector = std::array<double, kParams>;

  std::string name;
  Regressor regressor{};
  std::function<ParamVector(double, Side)> theta_signal;
  std::function<double(double, Side)> b_signal;
  // Sorted jump times of theta/b inside [t0, t1].
  std::function<std::vector<double>(double, double)> breakpoints = [](double, double) {
    return std::vector<double>{};
  };
};

template <int Q>
struct ParameterSample {
  std::array<double, Q> theta{};
  double b = 0.0;
};

// phi_i(x_1..x_i), i is 1-based.
template <class Regressor>
std::array<double, Regressor::kParams> eval_regressor(const SystemModel<Regressor>& model, int i,
                                                      std::span<const double> x_prefix) {
  if (i < 1 || i > Regressor::kStates)
    throw DomainError("regressor index " + std::to_string(i) + " outside 1.." +
                      std::to_string(Regressor::kStates));
  if (static_cast<int>(x_prefix.size()) != i)
    throw DomainError("regressor " + std::to_string(i) + " expects " + std::to_string(i) +
                      " states, got " + std::to_string(x_prefix.size()));
  for (double xv : x_prefix)
    if (!std::isfinite(xv)) throw DomainError("non-finite state passed to regressor");
  return model.regressor.phi(i, x_prefix);
}

template <class Regressor>
ParameterSample<Regressor::kParams> eval_parameters(const SystemModel<Regressor>& model, double t,
                                                    Side side = Side::Right) {
  if (!(t >= 0.0)) throw DomainError("parameter signals are defined for t >= 0");
  return {model.theta_signal(t, side), model.b_signal(t, side)};
}

// sgn(sin(omega t)) with the requested one-sided limit at its zeros.
inline double square_wave_sign(double omega, double t, Side side) {
  constexpr double kProbe = 1e-9;
  const double shifted = side == Side::Right ? t + kProbe : t - kProbe;
  return std::sin(omega * shifted) >= 0.0 ? 1.0 : -1.0;
}

// Zeros k*pi/omega of sin(omega t) inside [t0, t1].
inline std::vector<double> square_wave_breakpoints(double omega, double t0, double t1) {
  std::vector<double> out;
  const double period = std::numbers::pi / omega;
  for (long k = static_cast<long>(std::ceil(t0 / period)); k * period <= t1; ++k)
    out.push_back(k * period);
  return out;
}

struct ProbeGrid {
  double t0 = 0.0;
  double t1 = 20.0;
  double step = 0.01;
};

struct ValidationEntry {
  std::string check;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }
  const ValidationEntry* find(const std::string& check) const {
    for (const auto& e : entries)
      if (e.check == check) return &e;
    return nullptr;
  }
};

inline std::vector<double> probe_times(const ProbeGrid& grid) {
  if (!(grid.step > 0.0) || !(grid.t1 >= grid.t0)) throw ConfigError("empty probe grid");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((grid.t1 - grid.t0) / grid.step + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(grid.t0 + k * grid.step);
  return out;
}

// Checks the structural assumptions on a finite probe grid.
template <class Regressor>
ValidationReport validate_model(const SystemModel<Regressor>& model, const ProbeGrid& grid) {
  constexpr int n = Regressor::kStates;
  constexpr int q = Regressor::kParams;
  ValidationReport report;

  {
    ValidationEntry e{"regressors vanish at origin", true, ""};
    std::array<double, n> zero{};
    for (int i = 1; i <= n; ++i) {
      const auto phi = model.regressor.phi(i, std::span<const double>(zero.data(), i));
      double norm = 0.0;
      for (double v : phi) norm = std::max(norm, std::abs(v));
      if (norm != 0.0) {
        e.passed = false;
        e.detail += "phi_" + std::to_string(i) + "(0) has norm " + std::to_string(norm) + "; ";
      }
    }
    report.entries.push_back(e);
  }

  const auto times = probe_times(grid);
  {
    ValidationEntry e{"control coefficient sign constant", true, ""};
    double first_sign = 0.0;
    for (double t : times) {
      const double b = model.b_signal(t, Side::Right);
      if (!(std::abs(b) > 0.0) || !std::isfinite(b)) {
        e.passed = false;
        e.detail = "b(" + std::to_string(t) + ") = " + std::to_string(b);
        break;
      }
      const double sign = b > 0.0 ? 1.0 : -1.0;
      if (first_sign == 0.0) first_sign = sign;
      if (sign != first_sign) {
        e.passed = false;
        e.detail = "sign change at t = " + std::to_string(t);
        break;
      }
    }
    if (e.passed) e.detail = first_sign > 0 ? "b > 0" : "b < 0";
    report.entries.push_back(e);
  }

  {
    ValidationEntry e{"parameters bounded", true, ""};
    std::array<double, q> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (double t : times) {
      const auto theta = model.theta_signal(t, Side::Right);
      for (int j = 0; j < q; ++j) {
        if (!std::isfinite(theta[j])) {
          e.passed = false;
          e.detail = "non-finite theta at t = " + std::to_string(t);
        }
        lo[j] = std::min(lo[j], theta[j]);
        hi[j] = std::max(hi[j], theta[j]);
      }
      if (!e.passed) break;
    }
    if (e.passed) {
      std::ostringstream os;
      for (int j = 0; j < q; ++j) os << "theta_" << j + 1 << " in [" << lo[j] << ", " << hi[j] << "] ";
      e.detail = os.str();
    }
    report.entries.push_back(e);
  }
  return report;
}

// Known radius of the parameter variation plus optional test-only hints for
// the congealed constants.
template <int Q>
struct ParameterBounds {
  double delta_theta = 0.0;
  std::optional<std::array<double, Q>> ell_theta_hint;
  std::optional<double> ell_b_hint;
};

template <class Regressor>
std::array<double, Regressor::kParams> mean_theta(const SystemModel<Regressor>& model,
                                                  const ProbeGrid& grid) {
  std::array<double, Regressor::kParams> mean{};
  const auto times = probe_times(grid);
  for (double t : times) {
    const auto theta = model.theta_signal(t, Side::Right);
    for (int j = 0; j < Regressor::kParams; ++j) mean[j] += theta[j];
  }
  for (auto& m : mean) m /= static_cast<double>(times.size());
  return mean;
}

template <class Regressor>
double mean_b(const SystemModel<Regressor>& model, const ProbeGrid& grid) {
  double mean = 0.0;
  const auto times = probe_times(grid);
  for (double t : times) mean += model.b_signal(t, Side::Right);
  return mean / static_cast<double>(times.size());
}

// sup_t ||theta(t) - ell_theta|| on the grid; ell_theta defaults to the grid mean.
template <class Regressor>
double max_parameter_deviation(const SystemModel<Regressor>& model,
                               const ParameterBounds<Regressor::kParams>& bounds,
                               const ProbeGrid& grid) {
  const auto center = bounds.ell_theta_hint ? *bounds.ell_theta_hint : mean_theta(model, grid);
  double worst = 0.0;
  for (double t : probe_times(grid)) {
    const auto theta = model.theta_signal(t, Side::Right);
    double sq = 0.0;
    for (int j = 0; j < Regressor::kParams; ++j) sq += (theta[j] - center[j]) * (theta[j] - center[j]);
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

}  // namespace expctl
