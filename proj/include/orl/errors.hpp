#pragma once

#include <stdexcept>
#include <string>

namespace orl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed something malformed: wrong dimensions, out-of-range
/// hyperparameters, empty containers where data is required.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during optimization (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Magic bytes or header fields do not describe a valid file.
class CorruptHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// File was written by an incompatible format revision.
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Header is valid but the payload ends early.
class TruncatedPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Run configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace orl
