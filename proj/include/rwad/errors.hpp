#pragma once

#include <stdexcept>
#include <string>

namespace rwad {

/// Malformed numerical input: non-Hermitian matrices, length mismatches,
/// out-of-range indices.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Missing or inconsistent configuration (envelopes, crossing data, config keys).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation refused to proceed because a numerical precondition fails
/// (under-resolved oscillations, phase-constraint violations, eigenvalue
/// collisions, non-convergent quadrature).
class NumericRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwad
