#pragma once

#include <stdexcept>
#include <string>

namespace xtalk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (device JSON, circuit text, plan file, decay CSV).
/// `line` is 1-based, 0 when unknown; `field` names the offending entry.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line = 0, std::string field = {})
      : Error(format(message, line, field)), line_(line), field_(std::move(field)) {}

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& message, int line, const std::string& field) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  int line_;
  std::string field_;
};

/// Well-formed input that violates a model invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by a caller (bad id, bad parameter range).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// RB curve fit did not converge or the data cannot identify the decay.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Solver backend failure: missing binary, timeout, infeasible instance.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A schedule failed verification where a verified one was required.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace xtalk
