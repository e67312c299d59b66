#pragma once

#include <stdexcept>
#include <string>

namespace cdte {

// Base for all library errors so callers can catch everything from this
// library in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required column or structural element of an input file is missing.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell or token failed to parse; message carries the row number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Parsed input violates a domain invariant (e.g. non-binary treatment).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Invalid parameter combination (K < 2, bandwidth <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A train/eval split left one treatment arm with too few rows.
class DegenerateSplitError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient design matrix; message names the offending column.
class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// Argument outside a function's mathematical domain (beta <= 0, f <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerical failure (non-finite objective, non-convergence); message carries
// the last iterate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdte
