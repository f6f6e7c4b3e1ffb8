#pragma once

#include <stdexcept>
#include <string>

namespace thermocast {

// Shape or dimension mismatch between tensors or window buffers.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: backward on a non-scalar, optimizer step without gradients, ...
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration value (non-positive delta, zero-variance column, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot be ingested (bad CSV, poor join coverage, ...).
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed payload; `path` points at the offending JSON location.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class NetworkError : public std::runtime_error {
 public:
  NetworkError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t step, double value)
      : std::runtime_error("non-finite total loss " + std::to_string(value) +
                           " at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step)),
        epoch_(epoch),
        step_(step) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t epoch_;
  std::size_t step_;
};

}  // namespace thermocast
