#pragma once

#include <stdexcept>
#include <string>

namespace ibridges {

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation leaves its admissible region, e.g. a matrix
/// that must stay positive definite loses positivity during a simulation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace ibridges
