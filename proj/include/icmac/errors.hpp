// SPDX-License-Identifier: Apache-2.0
//
// Exception types shared across the icmac library.
#pragma once

#include <stdexcept>
#include <string>

namespace icmac {

// Shape mismatch or an operation applied to a matrix of unsupported shape.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cholesky pivot negative beyond tolerance: input is not positive semi-definite.
class NotPsdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Iterative routine failed to converge (should not happen for the matrix
// sizes this library handles; indicates a bug or pathological input).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exhaustive enumeration would exceed the configured cap.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rank-deficient triangular factor handed to the sphere decoder. Signals a
// zero-probability channel event or a bug upstream.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid simulation or CLI configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File I/O failure, message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace icmac
