#pragma once

#include <stdexcept>
#include <string>

namespace gdlms {

/// Invalid or inconsistent user-supplied configuration (CLI exit code 2).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergence, non-convergence, singularity (CLI exit code 3).
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A documented precondition of an operation was violated by the caller.
struct precondition_error : std::logic_error {
  explicit precondition_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace gdlms
