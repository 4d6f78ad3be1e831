#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsff {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad call arguments or shape mismatches.
struct ArgumentError : Error {
  using Error::Error;
};

// Archive does not start with the expected magic or is otherwise malformed.
struct FormatError : Error {
  using Error::Error;
};

// Archive data block shorter than the header promises.
struct CorruptionError : Error {
  using Error::Error;
};

struct UnsupportedVersionError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct ConditioningError : Error {
  using Error::Error;
};

struct ScaleSupportError : Error {
  using Error::Error;
};

struct SegmentationError : Error {
  SegmentationError(std::size_t trial, const std::string& what)
      : Error("trial " + std::to_string(trial) + ": " + what), trial_index(trial) {}
  std::size_t trial_index;
};

struct DivergenceError : Error {
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_index(epoch) {}
  std::size_t epoch_index;
};

struct IncompleteReportError : Error {
  using Error::Error;
};

}  // namespace tsff
