#pragma once

#include <stdexcept>
#include <string>

namespace forcedosc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state or coordinate lies outside the region where a field is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A field or metric produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: bad parameters, empty sample sets, missing reports.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis needed to continue a derivation does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a fixed resource limit.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace forcedosc
