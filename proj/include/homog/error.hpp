#pragma once

#include <stdexcept>
#include <string>

namespace homog {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected before any numerical work starts (bad config, bad argument).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class MarginViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OverlapViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BadPrimitive : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionUnsupported : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ResolutionTooCoarse : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CrackOutsideInclusions : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooManyBreakableBonds : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure during a solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace homog
