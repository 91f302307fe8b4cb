#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace mplc {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields/masks that must share a grid do not.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// Operation on an all-zero (or otherwise degenerate) field.
class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or macro program (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A training stage aborted (divergence, non-finite gradients).
class StageError : public Error {
 public:
  using Error::Error;
};

// Non-fatal warnings (under-resolved waist, clipped mode power, ...) go
// through a replaceable handler so tests can observe them. Default: stderr.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace mplc
