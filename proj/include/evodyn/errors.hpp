#pragma once

#include <stdexcept>
#include <string>

namespace evodyn {

// Base of every error raised by the library. Callers that only need to report
// a failure can catch this; the subclasses exist so tests and the CLI can tell
// configuration problems apart from numerical ones.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class DriftExceeded : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidRuleSpec : public Error {
 public:
  using Error::Error;
};

class TooManyStrategies : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class NoPotentialAvailable : public Error {
 public:
  using Error::Error;
};

class NonHermitianForm : public Error {
 public:
  using Error::Error;
};

class IntegratorFailure : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace evodyn
