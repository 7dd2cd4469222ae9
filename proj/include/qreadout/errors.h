#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qreadout {

// Invalid configuration values (SimConfig, filter bands, pipeline descriptors).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad arguments to an otherwise valid operation (empty inputs, shape mismatches).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DatasetSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model and shot/dataset disagree on trace length or sample rate.
class IncompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t batch_index)
      : std::runtime_error(what + " (batch " + std::to_string(batch_index) + ")"),
        batch_index_(batch_index) {}

  std::size_t batch_index() const { return batch_index_; }

 private:
  std::size_t batch_index_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qreadout
