#pragma once

#include <stdexcept>
#include <string>

namespace dtrack {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A standing model assumption does not hold. `which()` names the condition.
class AssumptionViolated : public Error {
 public:
  AssumptionViolated(std::string which, const std::string& detail)
      : Error("assumption violated [" + which + "]: " + detail), which_(std::move(which)) {}
  const std::string& which() const noexcept { return which_; }

 private:
  std::string which_;
};

class SingularSigma : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// State lies outside the continuation region D = {x <= F3(z, m)}.
class OutOfRegion : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dtrack
