#pragma once

#include <stdexcept>
#include <string>

namespace bandlq {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative method or estimator failed to reach its target.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Input could not be read or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string shape_str(long long r, long long c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

}  // namespace bandlq
