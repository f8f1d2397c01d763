#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wg {

/// Invalid construction parameters (bad node count, missing probability, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed: non-convergence, singular system, truncated sampling.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An algorithm stepper observed a broken invariant; aborts the run.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the engine when a stepper aborts; carries the offending iteration.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(std::uint64_t iteration, const std::string& what)
      : std::runtime_error("run aborted at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  std::uint64_t iteration() const noexcept { return iteration_; }

 private:
  std::uint64_t iteration_;
};

}  // namespace wg
