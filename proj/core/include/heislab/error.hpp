#pragma once

#include <stdexcept>
#include <string>

namespace heislab {

// Violated precondition (bad argument, degenerate geometry, point outside a
// required region).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A quadrature or evaluation produced a non-finite value, or the integral is
// genuinely divergent (e.g. evaluation on top of an atom).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The path optimizer could not meet its endpoint tolerance.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, double best_miss)
      : std::runtime_error(what), best_miss_(best_miss) {}
  double best_miss() const noexcept { return best_miss_; }

 private:
  double best_miss_;
};

}  // namespace heislab
