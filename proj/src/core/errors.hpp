#pragma once

#include <stdexcept>
#include <string>

namespace coplan {

// Base class for every error raised by the library. The C API maps each
// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model/FSC/policy data: schema violations, non-stochastic rows,
// out-of-range indices.
class ModelError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Pr(o | b, a) == 0 during filtering.
class ZeroProbabilityObservation : public Error {
 public:
  using Error::Error;
};

class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

// The action threshold removed every human action.
class AllActionsPruned : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the current state (e.g. acting in a finished
// session).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace coplan
