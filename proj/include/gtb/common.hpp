#pragma once

#include <stdexcept>
#include <string>

namespace gtb {

// Thrown when a caller breaks a documented precondition (for example an
// environment step that executes an action its own mask forbids). These are
// bugs, not runtime conditions, and are never caught inside the library.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed user input: config files, scenario maps, CLI arguments.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Saez rate computation requested on a buffer with no usable incomes.
struct EmptyBufferError : std::runtime_error {
  EmptyBufferError() : std::runtime_error("income buffer holds no positive incomes") {}
};

// OLS elasticity fit with zero variance in the regressor.
struct SingularFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A training loss came back NaN or infinite. Optimization state is garbage at
// this point, so the trainer aborts the run instead of stepping further.
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gtb
