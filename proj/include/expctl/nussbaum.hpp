#pragma once

// Enhanced Nussbaum gains with a hard evaluation bound, plus a finite-window
// check of the four growth conditions that define them.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "expctl/errors.hpp"

namespace expctl {

enum class NussbaumKind { SinExpSquare, CosExpSquare, UserSupplied };

struct NussbaumSpec {
  NussbaumKind kind = NussbaumKind::SinExpSquare;
  // e^{36} ~ 4.3e15 is still comfortably representable.
  double xi_max = 6.0;
  std::function<double(double)> user;
  std::string label = "sin-exp-square";

  static NussbaumSpec sin_exp_square(double xi_max = 6.0) {
    return {NussbaumKind::SinExpSquare, xi_max, {}, "sin-exp-square"};
  }
  static NussbaumSpec cos_exp_square(double xi_max = 6.0) {
    return {NussbaumKind::CosExpSquare, xi_max, {}, "cos-exp-square"};
  }
  static NussbaumSpec user_supplied(std::function<double(double)> f, std::string label,
                                    double xi_max = 6.0) {
    return {NussbaumKind::UserSupplied, xi_max, std::move(f), std::move(label)};
  }
};

inline NussbaumSpec nussbaum_from_name(const std::string& name, double xi_max = 6.0) {
  if (name == "sin-exp-square") return NussbaumSpec::sin_exp_square(xi_max);
  if (name == "cos-exp-square") return NussbaumSpec::cos_exp_square(xi_max);
  // Reference non-Nussbaum functions, handy for exercising the verifier.
  if (name == "constant-one") return NussbaumSpec::user_supplied([](double) { return 1.0; }, name, xi_max);
  if (name == "identity") return NussbaumSpec::user_supplied([](double x) { return x; }, name, xi_max);
  throw ConfigError("unknown Nussbaum kind '" + name + "'");
}

inline double evaluate(const NussbaumSpec& spec, double xi) {
  if (std::isnan(xi) || xi < 0.0) throw DomainError("Nussbaum argument must be non-negative");
  if (xi > spec.xi_max) throw OverflowGuardError(xi, spec.xi_max);
  switch (spec.kind) {
    case NussbaumKind::SinExpSquare:
      return std::sin(xi) * std::exp(xi * xi);
    case NussbaumKind::CosExpSquare:
      return std::cos(xi) * std::exp(xi * xi);
    case NussbaumKind::UserSupplied:
      if (!spec.user) throw ConfigError("user-supplied Nussbaum function is empty");
      return spec.user(xi);
  }
  return 0.0;
}

inline double positive_part(double v) { return std::max(0.0, v); }
inline double negative_part(double v) { return std::max(0.0, -v); }

struct GrowthCheck {
  std::string name;
  double supremum = 0.0;                 // running sup over the evaluable window
  std::optional<double> first_exceeded;  // xi where the threshold was first crossed
  bool evaluable = false;                // denominator became non-zero somewhere
  bool passed = false;
};

struct RatioReport {
  std::string function_label;
  double threshold = 10.0;
  double xi_end = 0.0;
  // mean of N+, mean of N-, int N+ / int N-, int N- / int N+
  std::array<GrowthCheck, 4> checks;
  std::string verdict = "finite-range evidence";

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  std::string to_text() const {
    std::ostringstream os;
    os << "function: " << function_label << "\n"
       << "window: [0, " << xi_end << "]\n"
       << "threshold: " << threshold << "\n";
    for (const auto& c : checks) {
      os << c.name << ": sup=" << c.supremum;
      if (c.first_exceeded) os << " exceeded_at=" << *c.first_exceeded;
      if (!c.evaluable) os << " (not evaluable)";
      os << " -> " << (c.passed ? "pass" : "fail") << "\n";
    }
    os << "overall: " << (passed() ? "pass" : "fail") << " (" << verdict << ")\n";
    return os.str();
  }
};

struct VerifyOptions {
  double threshold = 10.0;
  double fine_step_after = 4.0;  // e^{xi^2} turns steep past here
  double fine_step = 1e-3;
  double coarse_step = 1e-2;
};

inline std::vector<double> uniform_grid(double xi_end, int points_per_unit) {
  const int count = static_cast<int>(std::ceil(xi_end * points_per_unit));
  std::vector<double> out(count + 1);
  for (int k = 0; k <= count; ++k) out[k] = xi_end * k / count;
  return out;
}

// Composite trapezoid on the truncated parts with local refinement; the four
// definition quantities are tracked as running suprema over the grid.
inline RatioReport verify_enhanced(const NussbaumSpec& spec, const std::vector<double>& xi_grid,
                                   const VerifyOptions& options = {}) {
  if (xi_grid.size() < 2) throw ConfigError("xi grid needs at least two points");
  if (!std::is_sorted(xi_grid.begin(), xi_grid.end()) || xi_grid.front() < 0.0)
    throw ConfigError("xi grid must be sorted and start at a non-negative value");
  const double span = xi_grid.back() - xi_grid.front();
  if (span <= 0.0 || static_cast<double>(xi_grid.size() - 1) < 10.0 * span)
    throw ConfigError("xi grid too coarse: fewer than 10 points per unit");

  RatioReport report;
  report.function_label = spec.label;
  report.threshold = options.threshold;
  report.xi_end = xi_grid.back();
  report.checks[0].name = "mean_positive_part";
  report.checks[1].name = "mean_negative_part";
  report.checks[2].name = "positive_over_negative";
  report.checks[3].name = "negative_over_positive";

  double int_pos = 0.0;
  double int_neg = 0.0;
  auto update = [&](GrowthCheck& c, double value, double xi) {
    c.evaluable = true;
    c.supremum = std::max(c.supremum, value);
    if (!c.first_exceeded && value > options.threshold) c.first_exceeded = xi;
  };

  double prev_xi = xi_grid.front();
  double prev_n = evaluate(spec, prev_xi);
  for (std::size_t k = 1; k < xi_grid.size(); ++k) {
    const double a = xi_grid[k - 1];
    const double b = xi_grid[k];
    const double local = b > options.fine_step_after ? options.fine_step : options.coarse_step;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / local)));
    for (int p = 1; p <= pieces; ++p) {
      const double xi = p == pieces ? b : a + (b - a) * p / pieces;
      const double n = evaluate(spec, xi);
      const double h = xi - prev_xi;
      int_pos += 0.5 * h * (positive_part(prev_n) + positive_part(n));
      int_neg += 0.5 * h * (negative_part(prev_n) + negative_part(n));
      prev_xi = xi;
      prev_n = n;
    }
    if (b > 0.0) {
      update(report.checks[0], int_pos / b, b);
      update(report.checks[1], int_neg / b, b);
    }
    // A zero denominator means the ratio is not yet evaluable, not a failure.
    if (int_neg > 0.0) update(report.checks[2], int_pos / int_neg, b);
    if (int_pos > 0.0) update(report.checks[3], int_neg / int_pos, b);
  }
  for (auto& c : report.checks) c.passed = c.evaluable && c.supremum > options.threshold;
  return report;
}

}  // namespace expctl
