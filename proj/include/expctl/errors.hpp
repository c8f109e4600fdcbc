#pragma once

#include <stdexcept>
#include <string>

namespace expctl {

// Invalid user-supplied configuration (gains, initial conditions, overrides).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Nussbaum evaluation requested beyond the configured safe bound.
class OverflowGuardError : public std::overflow_error {
 public:
  explicit OverflowGuardError(double xi, double xi_max)
      : std::overflow_error("Nussbaum argument " + std::to_string(xi) +
                            " exceeds safe bound " + std::to_string(xi_max)),
        xi_(xi) {}
  double xi() const { return xi_; }

 private:
  double xi_;
};

// g(0) != 0, or the quadrature residual is outside tolerance.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace expctl
