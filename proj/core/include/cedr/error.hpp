#pragma once

#include <stdexcept>
#include <string>

namespace cedr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration key, value, or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed checkpoint or dataset file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inputs that violate an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

}  // namespace cedr
