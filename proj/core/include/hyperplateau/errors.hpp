#pragma once

#include <stdexcept>
#include <string>

namespace hyperplateau {

// Input outside the domain of a formula (z <= 0, parameters out of range, poles).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A geometric configuration that cannot be realized (intersecting planes,
// degenerate faces, curves touching gate circles, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative method that did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Malformed user configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hyperplateau
