#pragma once

#include <stdexcept>
#include <string>

namespace enkf_lstm {

// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  config = 2,
  data = 3,
  numerical = 4,
  io = 5,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Invalid argument values (bad sizes, empty inputs, out-of-range parameters).
class ArgumentError : public DataError {
 public:
  explicit ArgumentError(const std::string& what) : DataError(what) {}
};

// Dimension mismatches between containers that must agree.
class ShapeError : public DataError {
 public:
  explicit ShapeError(const std::string& what) : DataError(what) {}
};

// Input data without enough variation to fit a model.
class DegenerateDataError : public DataError {
 public:
  explicit DegenerateDataError(const std::string& what) : DataError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace enkf_lstm
