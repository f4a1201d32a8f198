#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlbalance {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input whose values violate a domain rule (label value not 0/1, NaN feature).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Column layout problems: unknown label names, zero feature columns, mismatched schemas.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The label matrix has no positive entry at all.
class DegenerateProfileError : public Error {
 public:
  using Error::Error;
};

/// A metric with no defined contribution (every instance or label skipped).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DivergedTrainingError : public NumericError {
 public:
  DivergedTrainingError(int epoch, int batch)
      : NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch) + " (non-finite loss)"),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

/// No minority label qualifies, so an oversampler has nothing to draw from.
class NothingToSampleError : public Error {
 public:
  using Error::Error;
};

/// The generator kept producing all-zero label vectors until the attempt budget ran out.
class GenerationStarvationError : public Error {
 public:
  GenerationStarvationError(long long accepted, long long attempts)
      : Error("generation starved: " + std::to_string(accepted) + " accepted out of " +
              std::to_string(attempts) + " attempts (acceptance rate " +
              std::to_string(attempts > 0 ? static_cast<double>(accepted) / attempts : 0.0) +
              ")"),
        accepted_(accepted),
        attempts_(attempts) {}

  long long accepted() const { return accepted_; }
  long long attempts() const { return attempts_; }
  double acceptance_rate() const {
    return attempts_ > 0 ? static_cast<double>(accepted_) / attempts_ : 0.0;
  }

 private:
  long long accepted_;
  long long attempts_;
};

}  // namespace mlbalance
