#pragma once

#include <stdexcept>
#include <string>

namespace mt2st {

// Error taxonomy used across the library. All carry a human-readable message
// naming the offending layer/field/step where applicable.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor or layer dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

// Caller-supplied data is out of domain (bad label, negative variance, ...).
struct InputError : Error {
  using Error::Error;
};

// An API contract was violated (stale cache, mismatched gradient sets).
struct ContractError : Error {
  using Error::Error;
};

// Experiment or schedule configuration is invalid.
struct ConfigError : Error {
  using Error::Error;
};

// Training produced a non-finite value; message names the step and task.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace mt2st
