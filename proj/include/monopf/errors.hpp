#pragma once

#include <stdexcept>
#include <string>

namespace monopf {

/// Raised when a case file or JSON document cannot be read.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Well-formed input that violates a model invariant (zero impedance, two slack buses, ...).
class InvalidDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConnectivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (dimension mismatch, singular scaling matrix, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem exceeds what the embedded conic solver is sized for.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace monopf
