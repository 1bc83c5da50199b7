#pragma once

#include <stdexcept>
#include <string>

namespace hjm {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file: missing column, bad header, empty file.
struct SchemaError : Error {
  using Error::Error;
};

// A cell failed to parse; message carries the row number.
struct ParseError : Error {
  using Error::Error;
};

// Data violates a structural invariant (duplicate key, nesting violation,
// orphan patient, out-of-window observation).
struct ValidationError : Error {
  using Error::Error;
};

// An argument is outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Numerical failure: non-finite intermediate, non-convergence, pathology.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace hjm
