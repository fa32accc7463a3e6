#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relu_lyapunov {

/// Thrown when vector or matrix shapes do not agree with the architecture.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation would exceed a configured size cap (path-sum oracle).
class ResourceError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Thrown when a logged trajectory lacks the data an analysis requires.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown by the optimizers when an iterate stops being finite.
/// `last_good_step` is the last step whose state was entirely finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t last_good_step)
      : std::runtime_error(what), last_good_step_(last_good_step) {}

  std::size_t last_good_step() const noexcept { return last_good_step_; }

 private:
  std::size_t last_good_step_;
};

}  // namespace relu_lyapunov
