// SPDX-License-Identifier: Apache-2.0
//
// Executable verification of the full-diversity criteria: a generalized rank
// equality, maximum-likelihood full diversity of a single code (every nonzero
// codeword difference has full column rank), and the stacked-rank additivity
// condition for group decoding with or without successive cancellation.
//
// "Almost surely" is operationalized as: zero failures over the sampled
// channels at the default rank tolerance, with one re-draw per failing pair
// to rule out measure-zero draws before declaring a hard failure.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icmac/channel.hpp"
#include "icmac/constellation.hpp"
#include "icmac/matcore.hpp"
#include "icmac/picgd.hpp"
#include "icmac/rng.hpp"
#include "icmac/stbc.hpp"

namespace icmac {

// Rank equality r([A V]) = r(C^H V C) + r(A) for A, C with orthogonal column
// spaces filling the ambient dimension, A full column rank, V PSD. Throws a
// PreconditionError naming the first violated assumption.
inline bool check_rank_equality(const CMatrix& a, const CMatrix& c, const CMatrix& v,
                         double rel_tol = kDefaultRankTol) {
  const std::size_t p = a.rows();
  if (c.rows() != p || v.rows() != p || v.cols() != p)
    throw PreconditionError("check_rank_equality: incompatible shapes");
  const std::size_t ra = rank_tol(a, rel_tol);
  const std::size_t rc = rank_tol(c, rel_tol);
  if (ra + rc != p)
    throw PreconditionError("check_rank_equality: rank(A) + rank(C) != ambient dimension");
  if (ra != a.cols())
    throw PreconditionError("check_rank_equality: A not of full column rank");
  const CMatrix cross = adjoint_times(c, a);
  if (cross.frobenius_norm() >
      1e-8 * std::max(1.0, a.frobenius_norm() * c.frobenius_norm()))
    throw PreconditionError("check_rank_equality: C^H A != 0");
  if ((v - v.adjoint()).frobenius_norm() > 1e-8 * std::max(1.0, v.frobenius_norm()))
    throw PreconditionError("check_rank_equality: V not Hermitian");
  try {
    (void)cholesky(v);
  } catch (const NotPsdError&) {
    throw PreconditionError("check_rank_equality: V not positive semi-definite");
  }

  const std::size_t lhs = rank_tol(hstack(a, v), rel_tol);
  const std::size_t rhs = rank_tol(adjoint_times(c, v * c), rel_tol) + ra;
  return lhs == rhs;
}

struct UserRankStats {
  std::size_t user = 0;
  std::uint64_t checked = 0;
  std::uint64_t failures = 0;
  int min_rank_margin = 0;  // min over trials of observed - expected rank
  std::uint64_t redraws = 0;
};

struct RankReport {
  std::string scheme_id;
  std::string check;  // "ml-full-diversity" or "rank-additivity"
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  int min_rank_margin = 0;
  bool exhaustive = true;
  std::uint64_t difference_space = 0;  // size of the full difference codebook
  std::vector<UserRankStats> per_user;

  void fold(const UserRankStats& u) {
    trials += u.checked;
    failures += u.failures;
    min_rank_margin = std::min(min_rank_margin, u.min_rank_margin);
    per_user.push_back(u);
  }
};

namespace detail {

// Codeword difference for a difference vector in the unrotated symbol
// domain: Delta X = sum_i A_i (U ds)_i.
inline CMatrix codeword_difference(const LinearDispersionCode& code, const CVector& ds) {
  const CVector dr = code.rotation.apply(ds);
  CMatrix dx(code.T, code.nt);
  for (std::size_t i = 0; i < code.n; ++i) {
    if (dr[i] == cplx(0.0)) continue;
    for (std::size_t c = 0; c < code.nt; ++c)
      for (std::size_t r = 0; r < code.T; ++r) dx(r, c) += code.dispersion[i](r, c) * dr[i];
  }
  return dx;
}

inline CVector random_nonzero_difference(const std::vector<cplx>& diffs, std::size_t n,
                                         Rng& rng) {
  CVector ds(n);
  for (;;) {
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      ds[i] = diffs[rng.uniform_below(static_cast<std::uint32_t>(diffs.size()))];
      if (ds[i] != cplx(0.0)) nonzero = true;
    }
    if (nonzero) return ds;
  }
}

}  // namespace detail

// ML full diversity of one user's code: every nonzero codeword difference
// over the constellation's difference alphabet must have rank nt. Exhaustive
// when the difference codebook fits under `cap`, otherwise uniform sampling
// of `cap` nonzero difference vectors (coverage reported via `exhaustive`).
inline UserRankStats check_ml_full_diversity_user(const LinearDispersionCode& code,
                                                  const QamConstellation& constell,
                                                  std::uint64_t cap,
                                                  std::uint64_t sample_seed = 1234,
                                                  std::uint64_t* space_out = nullptr,
                                                  bool* exhaustive_out = nullptr) {
  const std::vector<cplx> diffs = constell.symbol_differences();
  std::uint64_t space = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < code.n; ++i) {
    if (space > (std::uint64_t{1} << 62) / diffs.size()) {
      overflow = true;
      break;
    }
    space *= diffs.size();
  }
  const bool exhaustive = !overflow && space - 1 <= cap;
  if (space_out) *space_out = overflow ? 0 : space - 1;
  if (exhaustive_out) *exhaustive_out = exhaustive;

  UserRankStats st;
  st.user = code.user;
  auto check_one = [&](const CVector& ds) {
    const CMatrix dx = detail::codeword_difference(code, ds);
    const int margin = static_cast<int>(rank_tol(dx)) - static_cast<int>(code.nt);
    ++st.checked;
    st.min_rank_margin = std::min(st.min_rank_margin, margin);
    if (margin < 0) ++st.failures;
  };

  if (exhaustive) {
    std::vector<std::size_t> odo(code.n, 0);
    CVector ds(code.n);
    for (;;) {
      bool nonzero = false;
      for (std::size_t i = 0; i < code.n; ++i) {
        ds[i] = diffs[odo[i]];
        if (ds[i] != cplx(0.0)) nonzero = true;
      }
      if (nonzero) check_one(ds);
      std::size_t k = code.n;
      while (k > 0) {
        if (++odo[k - 1] < diffs.size()) break;
        odo[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
  } else {
    Rng rng(sample_seed);
    for (std::uint64_t t = 0; t < cap; ++t)
      check_one(detail::random_nonzero_difference(diffs, code.n, rng));
  }
  return st;
}

inline RankReport check_ml_full_diversity(const MultiUserScheme& scheme,
                                          const QamConstellation& constell,
                                          std::uint64_t cap = 100000,
                                          std::uint64_t sample_seed = 1234) {
  RankReport rep;
  rep.scheme_id = scheme.id();
  rep.check = "ml-full-diversity";
  for (const LinearDispersionCode& code : scheme.codes) {
    bool exhaustive = true;
    std::uint64_t space = 0;
    rep.fold(check_ml_full_diversity_user(code, constell, cap, sample_seed, &space,
                                          &exhaustive));
    rep.exhaustive = rep.exhaustive && exhaustive;
    rep.difference_space = space;
  }
  return rep;
}

// Stacked-rank additivity: for each user, over random single-antenna channels
// and sampled codeword differences, r([H_bar DX]) must equal
// r(H_bar) + r(DX). The interferer stack follows the decoder mode: all other
// users for plain group decoding, only later users in decode order for SIC.
// One receive antenna suffices (the stacked matrix is a vertical repeat).
inline RankReport check_rank_additivity(const MultiUserScheme& scheme,
                                     const QamConstellation& constell,
                                     std::uint64_t n_channels, std::uint64_t n_diffs,
                                     DecoderMode mode, std::uint64_t seed = 99) {
  RankReport rep;
  rep.scheme_id = scheme.id();
  rep.check = "rank-additivity";
  const std::vector<cplx> diffs = constell.symbol_differences();

  for (std::size_t pos = 0; pos < scheme.decode_order.size(); ++pos) {
    const std::size_t l = scheme.decode_order[pos];
    const std::vector<std::size_t> interf =
        interferer_set(scheme.decode_order, pos, scheme.K, mode);
    UserRankStats st;
    st.user = l;

    for (std::uint64_t c = 0; c < n_channels; ++c) {
      for (std::uint64_t d = 0; d < n_diffs; ++d) {
        bool ok = false;
        int margin = 0;
        for (std::uint64_t attempt = 0; attempt < 2 && !ok; ++attempt) {
          Rng rng(derive_seed(seed, l, c * n_diffs + d, attempt));
          const ChannelRealization ch =
              sample_channel({scheme.K, scheme.nt, 1}, rng);
          const EquivalentChannel eq = build_equivalent(scheme, ch);
          CMatrix stack;
          for (std::size_t k : interf) stack = hstack(stack, eq.user[k]);
          const CVector ds =
              detail::random_nonzero_difference(diffs, scheme.n, rng);
          const CMatrix dx = detail::codeword_difference(scheme.codes[l], ds);
          const std::size_t r_h = stack.empty() ? 0 : rank_tol(stack);
          const std::size_t r_dx = rank_tol(dx);
          const std::size_t r_joint = rank_tol(hstack(stack, dx));
          margin = static_cast<int>(r_joint) -
                   static_cast<int>(r_h + r_dx);
          // the projected difference must also be nonzero: stacking a nonzero
          // difference has to grow the rank strictly
          ok = margin == 0 && r_joint > r_h;
          if (!ok && attempt == 0) ++st.redraws;
        }
        ++st.checked;
        st.min_rank_margin = std::min(st.min_rank_margin, margin);
        if (!ok) ++st.failures;
      }
    }
    rep.fold(st);
  }
  return rep;
}

}  // namespace icmac
