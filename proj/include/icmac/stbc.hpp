// SPDX-License-Identifier: Apache-2.0
//
// Code structures for the multi-user interference-cancellation schemes:
// the column-wise delayed code block, the two-user and three-user schemes
// built from it, real orthogonal symbol rotations with certified nonzero
// minimum product distance, dispersion-matrix extraction, and the per-user
// rate bound.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "icmac/constellation.hpp"
#include "icmac/errors.hpp"
#include "icmac/matcore.hpp"

namespace icmac {

// ---- rotations --------------------------------------------------------------

// Real orthogonal n×n symbol rotation. `certified` is true only if the
// brute-force minimum-product-distance check passed at construction; the
// simulator refuses uncertified rotations (the identity below exists purely
// for structural unit tests).
struct RotationMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // row-major
  bool certified = false;

  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  CMatrix to_cmatrix() const {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  // s' = U s for complex s (real and imaginary parts rotate independently).
  CVector apply(const CVector& s) const {
    if (s.size() != n) throw DimensionError("rotation: length mismatch");
    CVector out(n, cplx(0.0));
    for (std::size_t i = 0; i < n; ++i) {
      cplx acc(0.0);
      for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * s[j];
      out[i] = acc;
    }
    return out;
  }
};

// Smallest |product of rotated coordinates| over all nonzero difference
// vectors with coordinates drawn from `diff_alphabet`. Exhaustive; feasible
// for n <= 6 over the 9-point QPSK difference alphabet.
inline double min_product_distance(const RotationMatrix& u,
                                   const std::vector<cplx>& diff_alphabet) {
  const std::size_t n = u.n;
  std::vector<std::size_t> odo(n, 0);
  CVector ds(n, cplx(0.0));
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      ds[i] = diff_alphabet[odo[i]];
      if (ds[i] != cplx(0.0)) all_zero = false;
    }
    if (!all_zero) {
      double prod = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        cplx acc(0.0);
        for (std::size_t j = 0; j < n; ++j) acc += u.a[i * n + j] * ds[j];
        prod *= std::abs(acc);
      }
      best = std::min(best, prod);
    }
    std::size_t k = n;
    while (k > 0) {
      if (++odo[k - 1] < diff_alphabet.size()) break;
      odo[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return best;
}

namespace detail {

inline void check_orthogonal(const RotationMatrix& u, const char* what) {
  for (std::size_t i = 0; i < u.n; ++i)
    for (std::size_t j = 0; j < u.n; ++j) {
      double g = 0.0;
      for (std::size_t k = 0; k < u.n; ++k) g += u.a[k * u.n + i] * u.a[k * u.n + j];
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(g - want) > 1e-12) throw ConvergenceError(what);
    }
}

// Cyclotomic rotation for prime p = 2n+1: U[i][j] = (2/sqrt(p)) sin(2pi i j / p).
inline RotationMatrix cyclotomic_rotation(std::size_t n) {
  const double p = 2.0 * static_cast<double>(n) + 1.0;
  RotationMatrix u;
  u.n = n;
  u.a.resize(n * n);
  const double scale = 2.0 / std::sqrt(p);
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      u.a[i * n + j] =
          scale * std::sin(2.0 * pi * static_cast<double>((i + 1) * (j + 1)) / p);
  return u;
}

inline RotationMatrix kron_rotation(const RotationMatrix& x, const RotationMatrix& y) {
  RotationMatrix u;
  u.n = x.n * y.n;
  u.a.resize(u.n * u.n);
  for (std::size_t ix = 0; ix < x.n; ++ix)
    for (std::size_t jx = 0; jx < x.n; ++jx)
      for (std::size_t iy = 0; iy < y.n; ++iy)
        for (std::size_t jy = 0; jy < y.n; ++jy)
          u.a[(ix * y.n + iy) * u.n + (jx * y.n + jy)] =
              x(ix, jx) * y(iy, jy);
  return u;
}

}  // namespace detail

// Full-diversity real orthogonal rotation for n in {2,...,6}. Prime-cyclotomic
// sine matrices for n = 2, 3, 5, 6; for n = 4 the Kronecker product of the
// n = 2 rotation with the quadratic rotation [[sin pi/8, cos pi/8],
// [cos pi/8, -sin pi/8]] (fields with coprime discriminants, so the product
// distance stays bounded away from zero). Every instance is certified at
// construction by exhaustive enumeration of QPSK difference vectors; a zero
// minimum product distance would be a build-breaking bug, not a data issue.
inline RotationMatrix algebraic_rotation(std::size_t n) {
  RotationMatrix u;
  switch (n) {
    case 2:
    case 3:
    case 5:
    case 6:
      u = detail::cyclotomic_rotation(n);
      break;
    case 4: {
      RotationMatrix w;
      w.n = 2;
      const double pi = 3.14159265358979323846;
      w.a = {std::sin(pi / 8), std::cos(pi / 8), std::cos(pi / 8), -std::sin(pi / 8)};
      u = detail::kron_rotation(detail::cyclotomic_rotation(2), w);
      break;
    }
    default:
      throw ConfigError("algebraic_rotation: supported sizes are 2..6");
  }
  detail::check_orthogonal(u, "algebraic_rotation: orthogonality check failed");
  const double mpd = min_product_distance(u, make_qam(4).symbol_differences());
  if (!(mpd > 1e-9))
    throw ConvergenceError("algebraic_rotation: product-distance certification failed");
  u.certified = true;
  return u;
}

// Identity rotation for structural tests. Never certified: its minimum
// product distance is zero, so the simulator will not accept it.
inline RotationMatrix identity_rotation(std::size_t n) {
  RotationMatrix u;
  u.n = n;
  u.a.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) u.a[i * n + i] = 1.0;
  u.certified = false;
  return u;
}

// ---- code block -------------------------------------------------------------

// The (n + nt - 1) × nt delay block: column c carries the rotated symbols
// with index-aligned placement — rows c..n hold s'_c..s'_n and rows
// n+1..n+c-1 wrap s'_1..s'_{c-1} (1-indexed description).
inline CMatrix build_code_block(const CVector& s_rot, std::size_t nt) {
  const std::size_t n = s_rot.size();
  if (n < nt) throw DimensionError("build_code_block: requires n >= nt");
  CMatrix m(n + nt - 1, nt);
  for (std::size_t c = 0; c < nt; ++c) {
    for (std::size_t r = c; r < n; ++r) m(r, c) = s_rot[r];
    for (std::size_t j = 0; j < c; ++j) m(n + j, c) = s_rot[j];
  }
  return m;
}

// ---- linear dispersion codes and schemes -------------------------------------

struct LinearDispersionCode {
  std::size_t user = 0;  // 0-based
  std::size_t T = 0, nt = 0, n = 0;
  std::vector<CMatrix> dispersion;  // n matrices, each T×nt
  RotationMatrix rotation;

  // X = sum_i A_i (U s)_i
  CMatrix encode(const CVector& s) const {
    if (s.size() != n) throw DimensionError("encode: symbol count mismatch");
    const CVector sr = rotation.apply(s);
    CMatrix x(T, nt);
    for (std::size_t i = 0; i < n; ++i) {
      if (sr[i] == cplx(0.0)) continue;
      for (std::size_t c = 0; c < nt; ++c)
        for (std::size_t r = 0; r < T; ++r) x(r, c) += dispersion[i](r, c) * sr[i];
    }
    return x;
  }
};

enum class SchemeKind { TwoUser, ThreeUser, Custom };

struct MultiUserScheme {
  SchemeKind kind = SchemeKind::Custom;
  std::size_t K = 0, T = 0, nt = 0, n = 0;
  std::vector<LinearDispersionCode> codes;
  std::vector<std::size_t> decode_order;  // for SIC; default 0..K-1

  double rate() const { return static_cast<double>(n) / static_cast<double>(T); }
  std::string id() const {
    switch (kind) {
      case SchemeKind::TwoUser:
        return "two-user n=" + std::to_string(n) + " nt=" + std::to_string(nt);
      case SchemeKind::ThreeUser:
        return "three-user n=" + std::to_string(n) + " nt=" + std::to_string(nt);
      default:
        return "custom";
    }
  }
};

// Per-user rate upper bound for a K-user scheme over T channel uses.
inline double rate_bound(std::size_t K, std::size_t nt, std::size_t T) {
  if (K < 2) throw DimensionError("rate_bound: K >= 2 required");
  if (T < nt || T == 0) throw DimensionError("rate_bound: T >= nt required");
  return (1.0 - static_cast<double>(nt) / static_cast<double>(T)) /
         static_cast<double>(K - 1);
}

// Probe a codeword builder with unit vectors to recover its dispersion
// matrices; the builder must be linear in the (already rotated) symbols.
inline std::vector<CMatrix> extract_dispersion(
    const std::function<CMatrix(const CVector&)>& builder, std::size_t n) {
  std::vector<CMatrix> a;
  a.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CVector e(n, cplx(0.0));
    e[i] = 1.0;
    a.push_back(builder(e));
  }
  return a;
}

namespace detail {

// Codeword builder for user `user` of the two- or three-user scheme, applied
// to already-rotated symbols: the code block at the user's row offset,
// zero-padded to T rows.
inline CMatrix placed_code_block(const CVector& s_rot, std::size_t nt, std::size_t T,
                                 std::size_t row_offset) {
  const CMatrix blk = build_code_block(s_rot, nt);
  CMatrix x(T, nt);
  for (std::size_t c = 0; c < nt; ++c)
    for (std::size_t r = 0; r < blk.rows(); ++r) x(row_offset + r, c) = blk(r, c);
  return x;
}

inline MultiUserScheme build_scheme(SchemeKind kind, std::size_t K, std::size_t nt,
                                    std::size_t n, std::size_t T,
                                    const std::vector<std::size_t>& offsets,
                                    const RotationMatrix& rot) {
  if (rot.n != n) throw DimensionError("scheme: rotation size must equal n");
  MultiUserScheme s;
  s.kind = kind;
  s.K = K;
  s.T = T;
  s.nt = nt;
  s.n = n;
  s.decode_order.resize(K);
  std::iota(s.decode_order.begin(), s.decode_order.end(), std::size_t{0});
  for (std::size_t k = 0; k < K; ++k) {
    LinearDispersionCode code;
    code.user = k;
    code.T = T;
    code.nt = nt;
    code.n = n;
    code.rotation = rot;
    const std::size_t off = offsets[k];
    code.dispersion = extract_dispersion(
        [&](const CVector& e) { return placed_code_block(e, nt, T, off); }, n);
    s.codes.push_back(std::move(code));
  }
  // K-user rate bound in exact integer form: n (K-1) <= T - nt, equality
  // for both shipped families.
  if (n * (K - 1) > T - nt) throw DimensionError("scheme: rate exceeds the K-user bound");
  return s;
}

}  // namespace detail

// Two-user scheme: user 1's block sits at the top of the T = n + nt frame,
// user 2's block one row lower. Meets the rate bound with equality.
inline MultiUserScheme two_user_scheme(std::size_t nt, std::size_t n,
                                       const RotationMatrix& rot) {
  if (n < nt) throw DimensionError("two_user_scheme: requires n >= nt");
  const std::size_t T = n + nt;
  return detail::build_scheme(SchemeKind::TwoUser, 2, nt, n, T, {0, 1}, rot);
}

// Three-user scheme over T = 2n + nt channel uses; requires n >= 2 nt - 1.
// Blocks start at rows 1, nt+1 and n+2 (1-indexed), and decoding is ordered
// 1, 2, 3 for successive cancellation.
inline MultiUserScheme three_user_scheme(std::size_t nt, std::size_t n,
                                         const RotationMatrix& rot) {
  if (n + 1 < 2 * nt) throw DimensionError("three_user_scheme: requires n >= 2 nt - 1");
  const std::size_t T = 2 * n + nt;
  return detail::build_scheme(SchemeKind::ThreeUser, 3, nt, n, T, {0, nt, n + 1}, rot);
}

}  // namespace icmac
