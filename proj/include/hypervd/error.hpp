#pragma once

#include <stdexcept>
#include <string>

namespace hypervd {

// Base for every error raised by the library. The CLI maps the three
// families below onto exit codes 2 (config), 3 (data), 4 (numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Shape/length mismatch between operands.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Snippet counts of the two modalities disagree.
class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed file contents; the message carries the byte offset.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypervd
