#pragma once

#include <stdexcept>
#include <string>

namespace dagfm {

// Base of every error raised by the library. The CLI maps these onto exit
// code 1; usage errors are handled separately by the argument parser.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched tensor shapes are a kind of misconfiguration.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Raised when a loss or gradient becomes non-finite during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dagfm
