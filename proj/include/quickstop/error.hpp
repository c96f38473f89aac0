#pragma once

#include <stdexcept>
#include <string>

namespace quickstop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside the documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or cannot support the requested computation.
class DataError : public Error {
 public:
  using Error::Error;
};

// An observed transition has zero probability under both hypotheses.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

}  // namespace quickstop
