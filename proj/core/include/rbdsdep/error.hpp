#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbdsdep {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (non-positive horizon, zero steps, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A combination of settings is inconsistent (e.g. Bernoulli jump probabilities >= 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Expression text could not be parsed. `offset` is the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Expression evaluation hit an undefined operation (division by zero, sqrt of a negative, overflow).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// A query point lies outside the declared search box of an envelope.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured node budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design at some step is singular or too badly conditioned.
class RegressionError : public Error {
 public:
  using Error::Error;
};

/// An envelope minimiser sits on the boundary of the search box; the box must grow.
class BoxTooSmall : public Error {
 public:
  using Error::Error;
};

/// A theorem-shaped ordering (sandwich, monotone sequence) was broken beyond tolerance.
class OrderingViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace rbdsdep
