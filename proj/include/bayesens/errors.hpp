#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayesens {

/// Malformed LIBSVM input; carries the 1-based line number (0 when the
/// error is not tied to a line, e.g. an empty stream).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid experiment or split configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a loss or update
/// (non-positive weight, negative loss, zero loss where a log is taken).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature that failed to meet its tolerance within the refinement bound.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bayesens
