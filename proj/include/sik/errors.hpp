#pragma once

#include <stdexcept>
#include <string>

namespace sik {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// psi / t / seed / grid values outside their valid range.
class InvalidHyperparameter : public Error {
 public:
  using Error::Error;
};

// Dimension or length mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument to a data generator or evaluation routine.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A metric that is not defined for the given input (e.g. AUROC on one class).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// Kernel mean requested over an empty reference set.
class EmptyReference : public Error {
 public:
  using Error::Error;
};

// Violated internal precondition, e.g. duplicate sample indices.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File was readable but its contents are malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sik
