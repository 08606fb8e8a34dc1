#pragma once

#include <stdexcept>
#include <string>

namespace lp {

// Root of every error the library throws. The CLI maps subclasses to exit
// codes (see report_error in the harness).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite or out-of-domain data where finite data was required.
class InvalidData : public Error {
 public:
  using Error::Error;
};

// A remote oracle failed after all retries. Retryable by the caller.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class InvalidFitness : public Error {
 public:
  using Error::Error;
};

// Corpus or configuration content that fails validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace lp
