#pragma once

#include <stdexcept>
#include <string>

namespace causalreg {

/// Tensor or matrix dimensions that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation
/// (negative count, non-finite input, out-of-support value, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line number and column name.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line, std::string column)
      : std::runtime_error(what), line_(line), column_(std::move(column)) {}
  long line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  long line_;
  std::string column_;
};

/// A quantity is undefined for the given input (single-class AUC,
/// zero-variance ranks, ...).
class UndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimization diverged or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cached forward state does not belong to the network passed to backward().
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace causalreg
