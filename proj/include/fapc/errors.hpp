#pragma once

#include <stdexcept>

namespace fapc {

// Vector/matrix shapes disagree with the operation's contract.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A linear solve could not reach the required residual, or an iterative
// norm estimate failed to settle within its step cap.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The restricted Gramian is numerically singular: the regularized operator
// cannot be inverted meaningfully below the coercivity floor.
struct CoercivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration problems: malformed documents, unknown keys, bad ranges,
// missing registry entries, unreadable referenced files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fapc
