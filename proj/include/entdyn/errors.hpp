#pragma once

#include <stdexcept>
#include <string>

namespace entdyn {

/// Precondition or argument outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative solve failed, instability detected, or a step was rejected.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time step violates the advective stability limit. Carries a usable step.
class CflError : public NumericalError {
 public:
  CflError(const std::string& what, double suggested_dt)
      : NumericalError(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Probability mass or particles left a domain that does not allow it.
class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace entdyn
