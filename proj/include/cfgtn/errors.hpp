#pragma once

#include <stdexcept>
#include <string>

namespace cfgtn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Correlation matrix not positive definite within tolerance.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Optimizer start point violates a constraint.
class InfeasibleStartError : public Error {
 public:
  using Error::Error;
};

/// An objective or density produced NaN or -inf where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data or files.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfgtn
