#pragma once

#include <stdexcept>
#include <string>

namespace hadamard {

/// Input failed validation (shape mismatch, out-of-range parameter, bad config).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative or dense numerical routine did not converge.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace hadamard
