#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roughflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands of incompatible dimension or degree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration (degree, refinement, word length, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Covariance factorization failure; carries the smallest eigenvalue seen.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// Non-finite state reached while stepping a solver.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Singular Jacobian or flow.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Refinement did not settle; carries the measured exponent that explains why.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double exponent)
      : Error(what), exponent_(exponent) {}
  double exponent() const noexcept { return exponent_; }

 private:
  double exponent_;
};

/// Output that could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace roughflow
