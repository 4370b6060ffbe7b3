#pragma once

#include <stdexcept>
#include <string>

namespace cdga {

// Base class for every error raised by the library. Callers that only need to
// report failures catch this; finer handling uses the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Filesystem or serialization problem.
class IoError : public Error {
 public:
  using Error::Error;
};

// A numerical routine produced NaN/Inf where a finite value is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The generation backend failed or is unreachable.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdga
