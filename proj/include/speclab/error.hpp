#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace speclab {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the 0-based byte offset of the
/// offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A function was evaluated outside its domain (log of a non-positive value,
/// division by zero, a point outside a positivity interval, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical method failed (step-size underflow, singular factorization,
/// sign loss of a solution that must stay positive, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A theorem harness refused to run because its hypotheses do not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Bad run configuration. `line` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace speclab
