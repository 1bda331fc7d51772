#pragma once

#include <stdexcept>
#include <string>

namespace qca {

/// Raised when an input violates a documented precondition (bad edge, point
/// outside the box, incompatible partitions, unknown config key, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the inputs are well formed but the requested quantity does not
/// exist numerically at these parameters (A(a) <= 0, no sign change, a ratio
/// whose denominator error bar crosses zero).
class NumericalRejection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qca
