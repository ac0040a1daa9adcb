#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpj {

/// Base class for every domain error raised by the library. Invalid
/// arguments are reported with std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File header does not match the expected magic or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File header is valid but the payload is short or inconsistent.
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

/// Data contains values outside the accepted domain (NaN, Inf, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateScalingError : public Error {
 public:
  using Error::Error;
};

/// Decomposition found nothing to retain (all-zero input).
class EmptySpectrumError : public Error {
 public:
  using Error::Error;
};

class UndefinedRelativeError : public Error {
 public:
  using Error::Error;
};

class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Run configuration is inconsistent or incomplete.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage needs a file produced by an earlier stage.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpj
