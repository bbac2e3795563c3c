#pragma once

#include <stdexcept>
#include <string>

namespace apseq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the representable range of a sequence.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between vectors, operators or sequences.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on the inputs does not hold.
class InputContractError : public Error {
 public:
  using Error::Error;
};

/// Forcing sequence failed the boundedness probe.
class BoundednessError : public InputContractError {
 public:
  using InputContractError::InputContractError;
};

/// Argument outside the mathematical domain (e.g. Re b <= 0 for a resolvent).
class DomainError : public InputContractError {
 public:
  using InputContractError::InputContractError;
};

/// The summability condition on the bound certificates could not be established.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Ill-conditioned or singular linear algebra.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace apseq
