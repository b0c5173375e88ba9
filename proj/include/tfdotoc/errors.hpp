#pragma once

#include <stdexcept>
#include <string>

namespace tfdotoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: a malformed config, a violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidSector : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// An operator maps states of a sector basis outside that basis.
class SectorViolation : public Error {
 public:
  using Error::Error;
};

class BasisMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionTooLarge : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// The particle-hole identity does not hold for the Hamiltonian at hand.
class SymmetryViolation : public Error {
 public:
  using Error::Error;
};

class NoCrossing : public Error {
 public:
  NoCrossing(const std::string& what, double min_value)
      : Error(what), min_value_(min_value) {}
  double min_value() const noexcept { return min_value_; }

 private:
  double min_value_;
};

}  // namespace tfdotoc
