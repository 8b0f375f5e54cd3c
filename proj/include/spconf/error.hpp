#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spconf {

/// Violated precondition on user-supplied arguments or configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a result (singular system, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky breakdown; carries the zero-based index of the failing pivot.
class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : NumericalError("matrix is not positive definite: pivot " + std::to_string(pivot) +
                       " = " + std::to_string(value)),
        pivot_(pivot) {}

  [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// The exposure has no component outside the spatial nuisance space.
class IdentifiabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace spconf
