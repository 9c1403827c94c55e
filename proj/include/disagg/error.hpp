#pragma once

#include <stdexcept>
#include <string>

namespace disagg {

/// Malformed input: bad graph, bad plan, bad file contents.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unparseable file contents; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long line = 0)
      : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem too large for an exact (brute-force or dense) method.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Iterative procedure or randomized construction did not succeed.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace disagg
