#pragma once

#include <stdexcept>
#include <string>

namespace facto {

// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Logarithm requested at (or numerically at) a rotation angle of pi.
class BranchError : public Error {
 public:
  using Error::Error;
};

// ZYX Euler extraction at gimbal lock.
class DegenerateOrientationError : public Error {
 public:
  using Error::Error;
};

class PrecisionError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// Stacked equality rows exceed the coefficient count M(N+1).
class OverConstrainedError : public Error {
 public:
  using Error::Error;
};

class InfeasibleEqualitiesError : public Error {
 public:
  using Error::Error;
};

// Gravity alone saturates a joint; no time dilation can help.
class StaticallyInfeasibleError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace facto
