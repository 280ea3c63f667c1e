#pragma once

#include <stdexcept>
#include <string>

namespace csqfi {

// Input outside the validated domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A Bloch vector that does not describe a physical state (|omega| > 1).
class InvalidStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Error budget not met after the maximum refinement. Carries the best
// value obtained and the error estimate that was reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double partial_value, double achieved_error)
      : std::runtime_error(what), partial_value_(partial_value), achieved_error_(achieved_error) {}

  double partial_value() const noexcept { return partial_value_; }
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double partial_value_;
  double achieved_error_;
};

}  // namespace csqfi
