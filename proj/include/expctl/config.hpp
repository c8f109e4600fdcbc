#pragma once

// Run configuration: an INI-style text file
//
//   # comment
//   [scenario]
//   name = wing-rock-theorem1
//   [gains]
//   k = 1, 1
//   lambda = 0.6
//   [sim]
//   horizon_s = 15
//   step_s = 1e-4
//
// flattened to "section.key" entries, followed by command-line overrides.
// Every key is checked against a schema before anything runs.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "expctl/errors.hpp"

namespace expctl {

enum class ValueKind { Real, Integer, RealList, Text };

struct KeySpec {
  std::string_view key;  // section.name
  ValueKind kind;
  std::string_view help;
};

inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema{
      {"scenario.name", ValueKind::Text, "scenario name (expctl_cli list)"},
      {"scenario.seed", ValueKind::Integer, "synthetic model seed"},
      {"scenario.a", ValueKind::Real, "scalar plant nominal a"},
      {"scenario.b", ValueKind::Real, "scalar plant input gain b (scalar-C only)"},
      {"gains.k", ValueKind::RealList, "k_1..k_n > 0"},
      {"gains.lambda", ValueKind::Real, "scaling rate lambda >= 0"},
      {"gains.delta_theta", ValueKind::Real, "bound on |theta(t) - l_theta|"},
      {"gains.epsilon_psi", ValueKind::Real, "psi damping weight > 0"},
      {"gains.gamma", ValueKind::Real, "Gamma = gamma I"},
      {"gains.gamma_rho", ValueKind::Real, "rho_hat adaptation gain"},
      {"gains.gamma_a", ValueKind::Real, "scalar a_hat adaptation gain"},
      {"gains.delta_a", ValueKind::Real, "scalar bound on |a(t) - l_a|"},
      {"gains.quadrature_nodes", ValueKind::Integer, "Gauss-Legendre nodes per factorization"},
      {"gains.residual_tolerance", ValueKind::Real, "factorization residual tolerance"},
      {"gains.nussbaum", ValueKind::Text, "sin-exp-square | cos-exp-square"},
      {"gains.xi_max", ValueKind::Real, "Nussbaum overflow guard"},
      {"initial.x", ValueKind::RealList, "x(0)"},
      {"initial.theta_hat", ValueKind::RealList, "theta_hat(0) >= 0"},
      {"initial.rho_hat", ValueKind::Real, "rho_hat(0), sign of b"},
      {"initial.xi", ValueKind::Real, "xi(0) >= 0"},
      {"initial.a_hat", ValueKind::Real, "scalar a_hat(0)"},
      {"sim.horizon_s", ValueKind::Real, "horizon T in seconds"},
      {"sim.step_s", ValueKind::Real, "RK4 step h in seconds (maximum step for adaptive runs)"},
      {"sim.record_every", ValueKind::Integer, "keep every k-th step"},
      {"sim.divergence_bound", ValueKind::Real, "state magnitude treated as divergence"},
  };
  return schema;
}

inline const KeySpec& find_key(std::string_view key) {
  for (const auto& spec : config_schema())
    if (spec.key == key) return spec;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

// Accepts "section.name" or a bare "name" that is unique across sections.
inline std::string qualify_key(std::string_view key) {
  if (key.find('.') != std::string_view::npos) return std::string(find_key(key).key);
  const KeySpec* match = nullptr;
  for (const auto& spec : config_schema()) {
    const auto dot = spec.key.find('.');
    if (spec.key.substr(dot + 1) != key) continue;
    if (match) throw ConfigError("ambiguous key '" + std::string(key) + "', qualify it with a section");
    match = &spec;
  }
  if (!match) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  return std::string(match->key);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view text, std::string_view key) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(text) + "' is not a finite number");
  return v;
}

inline long long parse_integer(std::string_view text, std::string_view key) {
  text = trim(text);
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(text) + "' is not an integer");
  return v;
}

inline std::vector<double> parse_real_list(std::string_view text, std::string_view key) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_real(text.substr(start, comma - start), key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct ConfigEntry {
  std::string key;  // qualified
  std::string value;
  std::string origin;  // "file:line" or "--set"
};

// Ordered entries; a later entry for the same key wins.
class RunConfig {
 public:
  void set(std::string_view key, std::string_view value, std::string origin = "--set") {
    const std::string qualified = qualify_key(trim(key));
    const std::string v(trim(value));
    check_value(qualified, v);
    entries_.push_back({qualified, v, std::move(origin)});
  }

  // "key=value"
  void set_assignment(std::string_view assignment, std::string origin = "--set") {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1), std::move(origin));
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  const std::string& text(std::string_view key) const {
    const auto* e = find(key);
    if (!e) throw ConfigError("missing key '" + std::string(key) + "'");
    return e->value;
  }
  double real(std::string_view key) const { return parse_real(text(key), key); }
  long long integer(std::string_view key) const { return parse_integer(text(key), key); }
  std::vector<double> reals(std::string_view key) const { return parse_real_list(text(key), key); }

  const std::vector<ConfigEntry>& entries() const { return entries_; }

  // Latest value per key, in first-seen order.
  std::vector<ConfigEntry> effective() const {
    std::vector<ConfigEntry> out;
    for (const auto& e : entries_) {
      bool replaced = false;
      for (auto& o : out)
        if (o.key == e.key) {
          o = e;
          replaced = true;
        }
      if (!replaced) out.push_back(e);
    }
    return out;
  }

 private:
  const ConfigEntry* find(std::string_view key) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
      if (it->key == key) return &*it;
    return nullptr;
  }

  static void check_value(const std::string& key, const std::string& value) {
    switch (find_key(key).kind) {
      case ValueKind::Real: parse_real(value, key); break;
      case ValueKind::Integer: parse_integer(value, key); break;
      case ValueKind::RealList: parse_real_list(value, key); break;
      case ValueKind::Text:
        if (value.empty()) throw ConfigError("key '" + key + "' needs a value");
        break;
    }
  }

  std::vector<ConfigEntry> entries_;
};

inline void parse_config(std::istream& is, RunConfig& cfg, const std::string& source = "<config>") {
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    std::string_view view = trim(std::string_view(line).substr(0, hash));
    if (view.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (view.front() == '[') {
      if (view.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(view.substr(1, view.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a [section]");
    const std::string key = section + "." + std::string(trim(view.substr(0, eq)));
    try {
      cfg.set(key, view.substr(eq + 1), where);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig cfg;
  parse_config(is, cfg, path);
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  RunConfig cfg;
  parse_config(is, cfg);
  return cfg;
}

}  // namespace expctl
