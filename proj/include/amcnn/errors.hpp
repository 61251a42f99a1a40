#pragma once

#include <stdexcept>
#include <string>

namespace amcnn {

/// Operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument is outside its documented domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file (dataset, vectors, checkpoint) does not match its format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or run configuration is inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file cannot be opened, written or renamed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amcnn
