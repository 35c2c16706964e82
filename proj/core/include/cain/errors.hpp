#pragma once

#include <stdexcept>
#include <string>

#include <ATen/core/Tensor.h>

namespace cain {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or missing configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// API misuse: empty inputs, out-of-range counts, mismatched dimensions.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or parameters during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint written by an incompatible format version or config.
class IncompatibleCheckpointError : public Error {
 public:
  using Error::Error;
};

/// Formats a tensor shape as "[a, b, c]".
std::string shape_string(const at::Tensor& t);

}  // namespace cain
