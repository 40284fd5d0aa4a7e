#pragma once

#include <stdexcept>
#include <string>

namespace mevolve {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape problems: mismatched dimensions, empty meshes, bad component counts.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well-formed but outside an operation's domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed or an invariant was breached at run time.
/// `value()` carries the offending quantity (residual, shift, violation).
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double value)
      : Error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

}  // namespace mevolve
