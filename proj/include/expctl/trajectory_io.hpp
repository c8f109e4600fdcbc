#pragma once

// Trajectory export. CSV columns:
//   t, x_1..x_n, u, theta_hat_1..theta_hat_q, <rho_hat|xi|none>, mu, diagnostics...
// The JSON form carries the schema tag "trajectory/v1" and reloads exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "json.hpp"

#include "expctl/errors.hpp"
#include "expctl/sim.hpp"

namespace expctl {

inline constexpr const char* kTrajectorySchema = "trajectory/v1";

inline std::vector<std::string> csv_columns(const Trajectory& traj) {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= traj.n; ++i) cols.push_back("x_" + std::to_string(i));
  cols.push_back("u");
  for (int r = 1; r <= traj.q; ++r) cols.push_back("theta_hat_" + std::to_string(r));
  cols.push_back(traj.adaptive_name);
  cols.push_back("mu");
  cols.insert(cols.end(), traj.diagnostic_names.begin(), traj.diagnostic_names.end());
  return cols;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const Trajectory& traj, std::ostream& os) {
  const auto cols = csv_columns(traj);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& s : traj.samples) {
    os << format_real(s.t);
    for (double v : s.x) os << ',' << format_real(v);
    os << ',' << format_real(s.u);
    for (double v : s.theta_hat) os << ',' << format_real(v);
    os << ',' << format_real(s.adaptive) << ',' << format_real(s.mu);
    for (double v : s.diagnostics) os << ',' << format_real(v);
    os << '\n';
  }
}

// Diagnostics only: t followed by the diagnostic columns.
inline void write_diagnostics_csv(const Trajectory& traj, std::ostream& os) {
  os << 't';
  for (const auto& name : traj.diagnostic_names) os << ',' << name;
  os << '\n';
  for (const auto& s : traj.samples) {
    os << format_real(s.t);
    for (double v : s.diagnostics) os << ',' << format_real(v);
    os << '\n';
  }
}

namespace detail {

// JSON has no inf/nan; those travel as strings.
inline nlohmann::json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw ConfigError("bad real in trajectory record: " + s);
}

inline nlohmann::json reals_to_json(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(real_to_json(x));
  return out;
}

inline std::vector<double> reals_from_json(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(real_from_json(x));
  return out;
}

inline RunStatus status_from_string(const std::string& s) {
  for (auto st : {RunStatus::Completed, RunStatus::Diverged, RunStatus::NussbaumOverflow,
                  RunStatus::FactorizationFailure, RunStatus::DomainError})
    if (s == to_string(st)) return st;
  throw ConfigError("unknown run status '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const Trajectory& traj) {
  nlohmann::json j;
  j["schema"] = kTrajectorySchema;
  j["label"] = traj.label;
  j["n"] = traj.n;
  j["q"] = traj.q;
  j["adaptive_name"] = traj.adaptive_name;
  j["diagnostic_names"] = traj.diagnostic_names;
  j["status"] = to_string(traj.status);
  j["failure_time"] = detail::real_to_json(traj.failure_time);
  j["message"] = traj.message;
  j["steps"] = traj.steps;
  j["max_residual"] = detail::real_to_json(traj.max_residual);
  j["min_adaptive_increment"] = detail::real_to_json(traj.min_adaptive_increment);
  auto& rows = j["samples"] = nlohmann::json::array();
  for (const auto& s : traj.samples) {
    rows.push_back({{"t", detail::real_to_json(s.t)},
                    {"x", detail::reals_to_json(s.x)},
                    {"u", detail::real_to_json(s.u)},
                    {"theta_hat", detail::reals_to_json(s.theta_hat)},
                    {"adaptive", detail::real_to_json(s.adaptive)},
                    {"mu", detail::real_to_json(s.mu)},
                    {"diagnostics", detail::reals_to_json(s.diagnostics)}});
  }
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kTrajectorySchema)
    throw ConfigError("not a " + std::string(kTrajectorySchema) + " record");
  Trajectory traj;
  traj.label = j.at("label").get<std::string>();
  traj.n = j.at("n").get<int>();
  traj.q = j.at("q").get<int>();
  traj.adaptive_name = j.at("adaptive_name").get<std::string>();
  traj.diagnostic_names = j.at("diagnostic_names").get<std::vector<std::string>>();
  traj.status = detail::status_from_string(j.at("status").get<std::string>());
  traj.failure_time = detail::real_from_json(j.at("failure_time"));
  traj.message = j.at("message").get<std::string>();
  traj.steps = j.at("steps").get<std::size_t>();
  traj.max_residual = detail::real_from_json(j.at("max_residual"));
  traj.min_adaptive_increment = detail::real_from_json(j.at("min_adaptive_increment"));
  for (const auto& row : j.at("samples")) {
    Sample s;
    s.t = detail::real_from_json(row.at("t"));
    s.x = detail::reals_from_json(row.at("x"));
    s.u = detail::real_from_json(row.at("u"));
    s.theta_hat = detail::reals_from_json(row.at("theta_hat"));
    s.adaptive = detail::real_from_json(row.at("adaptive"));
    s.mu = detail::real_from_json(row.at("mu"));
    s.diagnostics = detail::reals_from_json(row.at("diagnostics"));
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  w(os);
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

inline void save_csv(const Trajectory& traj, const std::string& path) {
  write_file(path, [&](std::ostream& os) { write_csv(traj, os); });
}

inline void save_json(const Trajectory& traj, const std::string& path) {
  write_file(path, [&](std::ostream& os) { os << to_json(traj).dump(1) << '\n'; });
}

inline Trajectory load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return trajectory_from_json(nlohmann::json::parse(is));
}

}  // namespace expctl
