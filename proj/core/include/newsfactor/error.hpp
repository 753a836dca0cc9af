#pragma once

#include <stdexcept>
#include <string>

namespace newsfactor {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Non-conformable matrix or vector shapes.
class DimensionError : public DataError {
 public:
  explicit DimensionError(const std::string& what) : DataError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A non-finite value appeared during an iterative solve.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, int iteration)
      : NumericalError(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A metric whose denominator vanishes (empty mask, zero variance).
class UndefinedMetricError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace newsfactor
