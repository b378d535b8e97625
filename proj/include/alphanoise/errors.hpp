#pragma once

#include <stdexcept>
#include <string>

namespace alphanoise {

/// Input outside an operation's domain (bad alpha, empty sample, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to meet its tolerance or produced non-finite values.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double error_estimate = 0.0)
      : std::runtime_error(what), error_estimate_(error_estimate) {}

  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alphanoise
