#pragma once

#include <stdexcept>
#include <string>

namespace unirec {

/// Base class for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, out-of-range parameters, violated preconditions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A link variant that an operation cannot handle (e.g. even links for mu).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures: divergence, contraction violated, log of nonpositive.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ContractionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or schema-violating configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace unirec
