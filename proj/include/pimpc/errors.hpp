#pragma once

#include <stdexcept>
#include <string>

namespace pimpc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class NonScalarLossError : public Error {
 public:
  using Error::Error;
};

class NonFiniteInputError : public Error {
 public:
  using Error::Error;
};

class IsolatedNodeError : public Error {
 public:
  using Error::Error;
};

class EmptyOrFullSubsetError : public Error {
 public:
  using Error::Error;
};

class TooLargeForEnumerationError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ExplicitInstabilityError : public Error {
 public:
  using Error::Error;
};

class DisconnectedGraphError : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset loading / split construction problems (missing files,
/// malformed rows, label range violations, insufficient class counts).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace pimpc
