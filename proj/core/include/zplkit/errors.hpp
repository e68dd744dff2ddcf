#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zplkit {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        detail_(what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }
  /// The same error prefixed with the name of the offending file.
  ParseError in_file(const std::string& source) const { return {source + ": " + detail_, line_}; }

 private:
  std::string detail_;
  std::size_t line_;
};

/// A fit could not be attempted: insufficient or degenerate data, no feature found.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ODE integration failed (step size underflow or step budget exhausted).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zplkit
