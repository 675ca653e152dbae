#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ccaboot {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: empty matrices, shape mismatches, non-finite values.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A matrix required to have full column rank does not. Carries the name of
// the offending block and its numerical rank.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(std::string block, std::ptrdiff_t numerical_rank,
                      const std::string& message)
      : Error(message), block_(std::move(block)), numerical_rank_(numerical_rank) {}

  const std::string& block() const { return block_; }
  std::ptrdiff_t numerical_rank() const { return numerical_rank_; }

 private:
  std::string block_;
  std::ptrdiff_t numerical_rank_;
};

// A covariance matrix is not positive definite within tolerance.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

// A data column (or direction column) is degenerate, e.g. zero variance.
// Carries the offending column index.
class DegenerateVariableError : public Error {
 public:
  DegenerateVariableError(std::ptrdiff_t column, const std::string& message)
      : Error(message), column_(column) {}

  std::ptrdiff_t column() const { return column_; }

 private:
  std::ptrdiff_t column_;
};

// A simulation ground truth could not be constructed as specified.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// A function was called outside its stated contract.
class ContractViolationError : public Error {
 public:
  using Error::Error;
};

// File or parse failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (CLI / JSON config layer).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccaboot
