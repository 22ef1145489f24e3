#pragma once

#include <stdexcept>
#include <string>

namespace gofkit {

/// Bad input: malformed arguments, violated preconditions, unreadable files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that could not be completed numerically (rank deficiency,
/// quadrature non-convergence, sampler envelope failure).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace gofkit
