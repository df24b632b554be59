#pragma once

#include <stdexcept>
#include <string>

namespace fhl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid is not strictly increasing, does not start at 0, or is too short.
class InvalidGridError : public Error {
 public:
  using Error::Error;
};

/// Inputs are individually valid but inconsistent with each other
/// (mismatched grids, missing Wiener path, wrong dimension, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside the range this library supports (e.g. H < 1/2).
class UnsupportedParameterError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument lies outside the mathematical domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace fhl
