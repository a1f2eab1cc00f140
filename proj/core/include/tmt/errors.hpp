#pragma once

#include <stdexcept>
#include <string>

namespace tmt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A hyperparameter or geometric setting is invalid (e.g. stride does not divide the image).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data violates a precondition (empty sets, non-finite values, bad labels).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A softmax column had no finite entry.
class DegenerateColumnError : public Error {
 public:
  using Error::Error;
};

/// A function under gradient check returned a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tmt
