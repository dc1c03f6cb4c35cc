#pragma once

#include <stdexcept>
#include <string>

namespace conegeo {

/// Invalid argument: out-of-range index, malformed parameter, non-closed loop.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain of an operation (log of a negative jet,
/// a point outside a chart).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The jets carried by a field are not deep enough for the requested derivative.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A metric (or a form restricted to a subspace) is singular or too badly
/// conditioned to invert.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

}  // namespace conegeo
