#pragma once

#include <stdexcept>
#include <string>

namespace hlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller passed an argument outside the documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configurable resource limit (ground size, table size, ...) was exceeded.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

/// A numeric computation produced non-finite or untrustworthy values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of a domain type is violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// The requested combination of model and operation is not supported.
class NotSupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace hlab
