#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace forte {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (XML syntax, bad WAV header, ...). line < 0 = unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line = -1)
      : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Well-formed input that violates a structural rule (unclosed wedge,
// mismatched repeat barlines, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// An API precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unsupported file format / sample layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

// An onset falls outside the alignment domain.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Constant (or too short) target vector cannot be standardized.
class DegenerateTargetError : public Error {
 public:
  using Error::Error;
};

class UnresolvedInstrumentError : public Error {
 public:
  UnresolvedInstrumentError(const std::string& name, std::vector<std::string> nearest)
      : Error(make_message(name, nearest)), nearest_(std::move(nearest)) {}
  const std::vector<std::string>& nearest() const { return nearest_; }

 private:
  static std::string make_message(const std::string& name,
                                  const std::vector<std::string>& nearest) {
    std::string m = "cannot resolve instrument name '" + name + "'; nearest candidates:";
    for (const auto& c : nearest) m += " " + c;
    return m;
  }
  std::vector<std::string> nearest_;
};

// Numerical failure in a solver (non-finite solution, hopeless conditioning).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Gradient-descent training produced a non-finite loss or gradient.
class TrainingFault : public Error {
 public:
  using Error::Error;
};

}  // namespace forte
