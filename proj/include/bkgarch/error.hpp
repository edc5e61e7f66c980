#pragma once

#include <stdexcept>
#include <string>

namespace bkgarch {

/// Bad argument or violated precondition. Maps to exit code 2 in the CLI.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numeric failure: non-stationary parameters, divergence, failed bracketing.
/// Maps to exit code 3 in the CLI.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonStationaryError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// File system or parse failure. Maps to exit code 4 in the CLI.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bkgarch
