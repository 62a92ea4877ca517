#pragma once

#include <stdexcept>
#include <string>

namespace cdlab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition failure on user-supplied arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An exact oracle was requested from a model that does not provide one.
class UnsupportedOracle : public Error {
 public:
  using Error::Error;
};

// A theoretical condition required by a bound does not hold, e.g. mu_tilde <= 0.
class ConditionViolated : public Error {
 public:
  using Error::Error;
};

// The centered statistic has zero variance under p_psi.
class DegenerateStatistic : public Error {
 public:
  using Error::Error;
};

class LinearAlgebraError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

}  // namespace cdlab
