#pragma once

#include <stdexcept>
#include <string>

namespace hestonfd {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, dimensions or preconditions supplied by the caller.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation failed (overflow, assembly mismatch, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hestonfd
