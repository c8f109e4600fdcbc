#pragma once

// Post-hoc checks on recorded trajectories.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expctl/errors.hpp"
#include "expctl/sim.hpp"

namespace expctl {

struct EnvelopeFit {
  double lambda = 0.0;
  double N = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;  // false for runs that did not complete
  bool holds = false;
  double argmax_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> margin;  // ||x(t)|| e^{lambda t} / N, equal to 1 at argmax
};

// N = max_k ||x(t_k)|| e^{lambda t_k}.
inline EnvelopeFit fit_envelope(const std::vector<double>& times, const std::vector<double>& norms,
                                double lambda) {
  if (times.size() != norms.size()) throw ConfigError("envelope fit needs matching time and norm series");
  EnvelopeFit fit;
  fit.lambda = lambda;
  fit.valid = true;
  std::vector<double> scaled(times.size());
  double best = 0.0;
  bool finite = true;
  for (std::size_t k = 0; k < times.size(); ++k) {
    scaled[k] = norms[k] * std::exp(lambda * times[k]);
    if (!std::isfinite(scaled[k])) {
      finite = false;
    } else if (k == 0 || scaled[k] > best) {
      best = scaled[k];
      fit.argmax_time = times[k];
    }
  }
  fit.N = finite ? best : std::numeric_limits<double>::infinity();
  fit.holds = !times.empty() && finite;
  fit.margin.resize(scaled.size());
  for (std::size_t k = 0; k < scaled.size(); ++k) fit.margin[k] = fit.N > 0.0 ? scaled[k] / fit.N : 0.0;
  return fit;
}

inline std::vector<double> state_norms(const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    double sq = 0.0;
    for (double v : s.x) sq += v * v;
    out.push_back(std::sqrt(sq));
  }
  return out;
}

inline EnvelopeFit fit_envelope(const Trajectory& traj, double lambda) {
  if (!traj.completed()) {
    EnvelopeFit fit;
    fit.lambda = lambda;
    return fit;
  }
  return fit_envelope(traj.times(), state_norms(traj), lambda);
}

struct MonotoneCheck {
  bool monotone = true;
  std::ptrdiff_t first_violation = -1;  // index k with s_{k+1} < s_k - tolerance
  double worst_drop = 0.0;
};

inline MonotoneCheck check_monotone(const std::vector<double>& signal, double tolerance = 0.0) {
  MonotoneCheck out;
  for (std::size_t k = 0; k + 1 < signal.size(); ++k) {
    const double drop = signal[k] - signal[k + 1];
    out.worst_drop = std::max(out.worst_drop, drop);
    if (drop > tolerance && out.monotone) {
      out.monotone = false;
      out.first_violation = static_cast<std::ptrdiff_t>(k);
    }
  }
  return out;
}

struct LimitCheck {
  bool converged = false;
  double limit = std::numeric_limits<double>::quiet_NaN();  // terminal value
  double tail_deviation = 0.0;  // sup over the tail of |s(t) - s(T)|
  double tail_range = 0.0;      // sup over the tail of |s(t) - s(t')|
  double epsilon = 0.0;
};

// epsilon < 0 selects the default 1e-3 (1 + |terminal|).
inline LimitCheck detect_limit(const std::vector<double>& times, const std::vector<double>& signal,
                               double tail_start, double epsilon = -1.0) {
  if (times.size() != signal.size()) throw ConfigError("limit check needs matching time and value series");
  if (times.empty() || !(times.back() > tail_start)) throw ConfigError("horizon must extend past the tail start");
  LimitCheck out;
  out.limit = signal.back();
  out.epsilon = epsilon >= 0.0 ? epsilon : 1e-3 * (1.0 + std::abs(out.limit));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < tail_start) continue;
    out.tail_deviation = std::max(out.tail_deviation, std::abs(signal[k] - out.limit));
    lo = std::min(lo, signal[k]);
    hi = std::max(hi, signal[k]);
  }
  out.tail_range = hi - lo;
  out.converged = out.tail_deviation < out.epsilon;
  return out;
}

inline double default_tail_start(const std::vector<double>& times) {
  return times.empty() ? 0.0 : times.front() + 2.0 / 3.0 * (times.back() - times.front());
}

struct MetricSpec {
  double settle_threshold = 0.05;
  std::vector<double> lambdas{0.0, 0.6};
};

struct ComparisonRow {
  std::string label;
  double settling_time = std::numeric_limits<double>::infinity();
  double peak_x1 = 0.0;
  double max_u = 0.0;
  std::vector<double> envelope_N;  // one per MetricSpec::lambdas entry
};

struct ComparisonTable {
  MetricSpec spec;
  std::vector<ComparisonRow> rows;  // sorted by label

  const ComparisonRow& row(const std::string& label) const {
    for (const auto& r : rows)
      if (r.label == label) return r;
    throw ConfigError("no run labelled '" + label + "'");
  }
};

// First grid time after which |x_1| < threshold for the rest of the run.
inline double settling_time(const Trajectory& traj, double threshold) {
  const auto& s = traj.samples;
  if (s.empty() || !(std::abs(s.back().x.at(0)) < threshold)) return std::numeric_limits<double>::infinity();
  std::size_t k = s.size();
  while (k > 0 && std::abs(s[k - 1].x.at(0)) < threshold) --k;
  return s[k].t;
}

inline ComparisonTable compare_runs(const std::vector<Trajectory>& runs, const MetricSpec& spec = {}) {
  ComparisonTable table;
  table.spec = spec;
  for (const auto& traj : runs) {
    if (traj.samples.empty()) throw ConfigError("run '" + traj.label + "' has no samples");
    const auto& ref = runs.front();
    if (traj.n != ref.n || traj.samples.front().x != ref.samples.front().x ||
        traj.samples.back().t != ref.samples.back().t)
      throw ConfigError("runs '" + ref.label + "' and '" + traj.label + "' differ in initial state or horizon");
    ComparisonRow row;
    row.label = traj.label;
    row.settling_time = settling_time(traj, spec.settle_threshold);
    for (const auto& s : traj.samples) {
      row.peak_x1 = std::max(row.peak_x1, std::abs(s.x.at(0)));
      row.max_u = std::max(row.max_u, std::abs(s.u));
    }
    for (double lam : spec.lambdas) row.envelope_N.push_back(fit_envelope(traj, lam).N);
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) { return a.label < b.label; });
  return table;
}

// Known-direction Lyapunov function with the congealed constants supplied as hints:
//   V = |s_n|^2 / 2 + (l_theta - theta_hat)^T Gamma^{-1} (l_theta - theta_hat) / 2
//       + |l_b| / (2 gamma_rho) (1 / l_b - rho_hat)^2
inline std::vector<double> lyapunov_known_direction(const Trajectory& traj, const Eigen::MatrixXd& gamma,
                                                    double gamma_rho, const std::vector<double>& ell_theta,
                                                    double ell_b) {
  if (traj.adaptive_name != "rho_hat") throw ConfigError("Lyapunov monitor needs a known-direction run");
  if (gamma.rows() != traj.q || gamma.cols() != traj.q || static_cast<int>(ell_theta.size()) != traj.q)
    throw ConfigError("Lyapunov monitor: dimension mismatch");
  if (ell_b == 0.0 || !(gamma_rho > 0.0)) throw ConfigError("Lyapunov monitor: need l_b != 0 and gamma_rho > 0");
  std::vector<int> s_cols;
  for (int i = 1; i <= traj.n; ++i) {
    const int c = traj.diagnostic_index("s_" + std::to_string(i));
    if (c < 0) throw ConfigError("Lyapunov monitor: missing s_" + std::to_string(i));
    s_cols.push_back(c);
  }
  const Eigen::MatrixXd gamma_inv = gamma.llt().solve(Eigen::MatrixXd::Identity(traj.q, traj.q));
  std::vector<double> out;
  out.reserve(traj.samples.size());
  Eigen::VectorXd err(traj.q);
  for (const auto& s : traj.samples) {
    double v = 0.0;
    for (int c : s_cols) v += 0.5 * s.diagnostics[c] * s.diagnostics[c];
    for (int r = 0; r < traj.q; ++r) err[r] = ell_theta[r] - s.theta_hat[r];
    v += 0.5 * err.dot(gamma_inv * err);
    const double rho_err = 1.0 / ell_b - s.adaptive;
    v += std::abs(ell_b) / (2.0 * gamma_rho) * rho_err * rho_err;
    out.push_back(v);
  }
  return out;
}

struct DescentCheck {
  bool descending = true;
  std::ptrdiff_t first_violation = -1;
  double worst_excess = 0.0;  // max of V_{k+1} - V_k - rel_tol (1 + V_k)
  std::size_t violations = 0;
};

inline DescentCheck check_descent(const std::vector<double>& v, double rel_tol = 1e-6) {
  DescentCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double excess = v[k + 1] - v[k] - rel_tol * (1.0 + v[k]);
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > 0.0) {
      ++out.violations;
      if (out.descending) out.first_violation = static_cast<std::ptrdiff_t>(k);
      out.descending = false;
    }
  }
  return out;
}

}  // namespace expctl
