#pragma once

#include <stdexcept>
#include <string>

namespace qff {

// Base for every error raised by the library. The CLI maps the concrete
// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: index out of range, dimension mismatch, invalid option.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Request exceeds a hard resource guard (e.g. too many qubits).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Missing or inconsistent data (forces absent, atom count mismatch, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed file. Carries the 1-based line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, int line)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Non-finite or otherwise unusable numerical result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Coincident atoms, collinear arms, vanishing cross products.
class DegenerateGeometryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qff
