#pragma once

#include <stdexcept>
#include <string>

namespace polyinr {

// Base of every exception the library throws. The CLI maps subclasses onto
// process exit codes (see exit_code_for in tools/).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something invalid: bad sizes, out-of-range indices, bad flags.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch inside the tensor graph.
class DimensionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// A documented precondition (e.g. gradcheck away from the rectifier kink)
// does not hold.
class PreconditionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Object used in a state that no longer permits the call (consumed tape).
class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced while evaluating or optimizing.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint / image container problems.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class RecordMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace polyinr
