// SPDX-License-Identifier: Apache-2.0
//
// Rayleigh channel sampling, per-user equivalent channels, and received-
// signal synthesis. Fading is quasi-static: one realization per codeword.
#pragma once

#include <cstdint>
#include <vector>

#include "icmac/matcore.hpp"
#include "icmac/rng.hpp"
#include "icmac/stbc.hpp"

namespace icmac {

struct ChannelDims {
  std::size_t users = 0, tx = 0, rx = 0;
};

// One fading realization: h[user][antenna] is the tx-coefficient vector from
// that user to one receive antenna, entries i.i.d. CN(0, 1).
struct ChannelRealization {
  ChannelDims dims;
  std::vector<CVector> h;  // index user * rx + antenna

  const CVector& coeffs(std::size_t user, std::size_t antenna) const {
    return h[user * dims.rx + antenna];
  }
  CVector& coeffs(std::size_t user, std::size_t antenna) {
    return h[user * dims.rx + antenna];
  }
};

inline ChannelRealization sample_channel(const ChannelDims& dims, Rng& rng) {
  if (dims.users == 0 || dims.tx == 0 || dims.rx == 0)
    throw DimensionError("sample_channel: dimensions must be positive");
  ChannelRealization ch;
  ch.dims = dims;
  ch.h.resize(dims.users * dims.rx);
  const double s = std::sqrt(0.5);  // CN(0,1): each part has variance 1/2
  for (auto& v : ch.h) {
    v.resize(dims.tx);
    for (auto& x : v) x = cplx(s * rng.gaussian(), s * rng.gaussian());
  }
  return ch;
}

// Deterministic-given-seed variant; same seed, same realization.
inline ChannelRealization sample_channel(const ChannelDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  return sample_channel(dims, rng);
}

// Equivalent-channel block of one user's delay code for one receive antenna:
// the (n + nt - 1) × n matrix whose i-th column is A_i h. Its closed form has
// the channel prefix sums on the diagonal and a wrapped tail; the generic
// dispersion product must reproduce it exactly (structural cross-check).
inline CMatrix channel_block(const CVector& h, std::size_t n) {
  const std::size_t nt = h.size();
  if (n < nt) throw DimensionError("channel_block: requires n >= nt");
  CMatrix d(n + nt - 1, n);
  cplx prefix(0.0);
  std::vector<cplx> prefix_sums(nt + 1, cplx(0.0));
  for (std::size_t i = 0; i < nt; ++i) {
    prefix += h[i];
    prefix_sums[i + 1] = prefix;
  }
  for (std::size_t r = 0; r < n; ++r) d(r, r) = prefix_sums[std::min(r + 1, nt)];
  for (std::size_t j = 0; j + 1 < nt; ++j) d(n + j, j) = prefix_sums[nt] - prefix_sums[j + 1];
  return d;
}

// Per-user stacked equivalent channels: row blocks over receive antennas of
// [A_1 h ... A_n h], plus the rotated variant used by the group decoders.
struct EquivalentChannel {
  std::size_t K = 0, nrT = 0, n = 0;
  std::vector<CMatrix> user;      // K matrices, each nrT × n
  std::vector<CMatrix> user_rot;  // cached user[k] * U_n
};

inline EquivalentChannel build_equivalent(const MultiUserScheme& scheme,
                                          const ChannelRealization& ch) {
  if (ch.dims.users != scheme.K || ch.dims.tx != scheme.nt)
    throw DimensionError("build_equivalent: scheme/channel dimension mismatch");
  EquivalentChannel eq;
  eq.K = scheme.K;
  eq.n = scheme.n;
  eq.nrT = ch.dims.rx * scheme.T;
  const CMatrix u = scheme.codes[0].rotation.to_cmatrix();
  for (std::size_t k = 0; k < scheme.K; ++k) {
    CMatrix hk(eq.nrT, scheme.n);
    for (std::size_t m = 0; m < ch.dims.rx; ++m) {
      const CVector& h = ch.coeffs(k, m);
      for (std::size_t i = 0; i < scheme.n; ++i) {
        const CVector col = scheme.codes[k].dispersion[i] * h;
        for (std::size_t r = 0; r < scheme.T; ++r) hk(m * scheme.T + r, i) = col[r];
      }
    }
    eq.user_rot.push_back(hk * u);
    eq.user.push_back(std::move(hk));
  }
  return eq;
}

// Noiseless superposition sum_k H~_k s_k.
inline CVector mix_users(const EquivalentChannel& eq,
                         const std::vector<CVector>& symbols) {
  if (symbols.size() != eq.K) throw DimensionError("mix_users: user count mismatch");
  CVector y(eq.nrT, cplx(0.0));
  for (std::size_t k = 0; k < eq.K; ++k) {
    const CVector c = eq.user[k] * symbols[k];
    for (std::size_t i = 0; i < eq.nrT; ++i) y[i] += c[i];
  }
  return y;
}

// Received vector: superposition plus CN(0, N0) noise per complex dimension.
inline CVector synthesize_rx(const EquivalentChannel& eq,
                             const std::vector<CVector>& symbols, double n0,
                             Rng& rng) {
  if (n0 < 0.0) throw PreconditionError("synthesize_rx: negative noise variance");
  CVector y = mix_users(eq, symbols);
  if (n0 > 0.0) {
    const double s = std::sqrt(0.5 * n0);
    for (auto& v : y) v += cplx(s * rng.gaussian(), s * rng.gaussian());
  }
  return y;
}

inline CVector synthesize_rx(const MultiUserScheme& scheme, const ChannelRealization& ch,
                             const std::vector<CVector>& symbols, double n0,
                             std::uint64_t seed) {
  Rng rng(seed);
  const EquivalentChannel eq = build_equivalent(scheme, ch);
  return synthesize_rx(eq, symbols, n0, rng);
}

}  // namespace icmac
