/// @file errors.hpp
/// @brief Exception taxonomy. Contract violations use std::invalid_argument;
///        runtime numerical failures derive from NumericalError so callers
///        (and the CLI exit-code mapping) can treat them uniformly.

#pragma once

#include <stdexcept>
#include <string>

namespace savmhd {

/// Base for every runtime numerical failure (maps to CLI exit code 1).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A factorization failed or a linear solve missed its residual contract.
struct SolverFailure : NumericalError {
  using NumericalError::NumericalError;
};

/// The scalar-closure denominator fell below the singularity guard.
struct SingularClosure : NumericalError {
  using NumericalError::NumericalError;
};

/// The discrete energy inequality was violated beyond round-off tolerance.
struct StabilityViolation : NumericalError {
  using NumericalError::NumericalError;
};

/// Command-line / config-file rejection (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stable machine-readable tag for an exception, used by report error records.
inline const char* error_type_name(const std::exception& e) {
  if (dynamic_cast<const SolverFailure*>(&e)) return "solver_failure";
  if (dynamic_cast<const SingularClosure*>(&e)) return "singular_closure";
  if (dynamic_cast<const StabilityViolation*>(&e)) return "stability_violation";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  return "error";
}

/// Exit code the command-line front end reports for an escaped exception:
/// config rejections are usage errors (2), everything else is a runtime
/// failure (1).
inline int exit_code_for(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) != nullptr ? 2 : 1;
}

}  // namespace savmhd
