#pragma once

#include <stdexcept>
#include <string>

namespace exsurv {

/// Invalid family parameters or out-of-domain arguments.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A measure whose required moment integral is not finite.
class IntegrabilityError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Non-finite values produced where a finite one is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature or root finding that did not reach its tolerance.
class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request that would exceed a hard size limit.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace exsurv
