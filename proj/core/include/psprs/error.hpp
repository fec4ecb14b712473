#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psprs {

// Validation failures: bad arguments, malformed files, inconsistent configs.
// The CLI maps these to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, std::size_t pivot)
      : NumericalError(what), pivot_(pivot) {}

  /// Zero-based index of the first non-positive pivot.
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace psprs
