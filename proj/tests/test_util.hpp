// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit suites: seeded random matrices/vectors and a
// couple of norm shorthands. Everything is deterministic via icmac::Rng.
#pragma once

#include <cstdint>

#include "icmac/matcore.hpp"
#include "icmac/rng.hpp"

namespace test_util {

inline icmac::cplx random_entry(icmac::Rng& rng) {
  return {2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
}

inline icmac::CMatrix random_matrix(std::size_t rows, std::size_t cols, icmac::Rng& rng) {
  icmac::CMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = random_entry(rng);
  return m;
}

inline icmac::CMatrix random_real_matrix(std::size_t rows, std::size_t cols, icmac::Rng& rng) {
  icmac::CMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = 2.0 * rng.uniform01() - 1.0;
  return m;
}

inline icmac::CVector random_vector(std::size_t n, icmac::Rng& rng) {
  icmac::CVector v(n);
  for (auto& x : v) x = random_entry(rng);
  return v;
}

// Random matrix with orthonormal columns (Q factor of a random matrix).
inline icmac::CMatrix random_unitary(std::size_t rows, std::size_t cols, icmac::Rng& rng) {
  return icmac::qr_decompose(random_matrix(rows, cols, rng)).q;
}

inline double rel_residual(const icmac::CMatrix& approx, const icmac::CMatrix& exact) {
  const double denom = exact.frobenius_norm();
  return (approx - exact).frobenius_norm() / (denom > 0 ? denom : 1.0);
}

}  // namespace test_util
