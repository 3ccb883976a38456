#pragma once

#include <stdexcept>
#include <string>

namespace msod {

// Base class for every failure the library reports. The CLI maps the three
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong dimensions, unbalanced assignments, bad files,
// enumeration guards exceeded.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The request is well formed but no feasible answer exists (T < 1/alpha,
// empty rerandomization region, exhausted draw budget).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// An iterative numerical method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace msod
