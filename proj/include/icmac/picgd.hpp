// SPDX-License-Identifier: Apache-2.0
//
// Partial interference cancellation group decoding, with and without
// successive cancellation, plus the real/imaginary-decoupled search path.
//
// Per user l the decoder projects the received vector onto the orthogonal
// complement of the interferers' equivalent-channel column space,
// P_l = I - B B^+ with B the stacked interferer matrix, then solves
//
//   min over s in A^n of || P_l y - P_l H~_l U s ||.
//
// With a real rotation the thin-QR triangular factor of P_l H~_l U is real,
// so the complex problem splits into two independent real searches over the
// constellation's axis grids. decode_joint is the exhaustive oracle the
// decoupled path is certified against; both share one tie-break rule
// (lowest lexicographic symbol index).
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "icmac/channel.hpp"
#include "icmac/constellation.hpp"
#include "icmac/matcore.hpp"
#include "icmac/sphere.hpp"
#include "icmac/stbc.hpp"

namespace icmac {

enum class DecoderMode { Picgd, PicgdSic };

struct UserDecoder {
  CMatrix projection;          // P_l (nrT × nrT)
  CMatrix projected;           // F_l = P_l H~_l U (nrT × n)
  CMatrix q1;                  // thin Q factor of F_l
  std::vector<double> r_real;  // real part of the triangular factor, row-major n×n
  double max_imag_r = 0.0;     // decoupling diagnostic: max |Im R|
};

struct GroupDecoder {
  DecoderMode mode = DecoderMode::Picgd;
  std::size_t K = 0, n = 0, nrT = 0;
  std::vector<std::size_t> order;  // decode order (user indices)
  std::vector<UserDecoder> users;  // indexed by user
  bool rotation_certified = false;
};

// Projection onto the complement of the interferers' column space. An empty
// interferer stack yields the identity.
inline CMatrix build_projection(const EquivalentChannel& eq,
                                const std::vector<std::size_t>& interferers) {
  if (interferers.empty()) return CMatrix::identity(eq.nrT);
  CMatrix stack;
  for (std::size_t k : interferers) stack = hstack(stack, eq.user[k]);
  const CMatrix pinv = pseudo_inverse(stack);
  CMatrix p = CMatrix::identity(eq.nrT) - stack * pinv;
  return p;
}

// Convenience overload: interference set per mode for user at `position` in
// the decode order.
inline std::vector<std::size_t> interferer_set(const std::vector<std::size_t>& order,
                                               std::size_t position, std::size_t K,
                                               DecoderMode mode) {
  std::vector<std::size_t> out;
  if (mode == DecoderMode::Picgd) {
    for (std::size_t k = 0; k < K; ++k)
      if (k != order[position]) out.push_back(k);
  } else {
    for (std::size_t p = position + 1; p < order.size(); ++p) out.push_back(order[p]);
  }
  return out;
}

inline GroupDecoder build_group_decoder(const MultiUserScheme& scheme,
                                        const EquivalentChannel& eq, DecoderMode mode,
                                        bool snr_order = false) {
  GroupDecoder gd;
  gd.mode = mode;
  gd.K = eq.K;
  gd.n = eq.n;
  gd.nrT = eq.nrT;
  gd.rotation_certified = scheme.codes[0].rotation.certified;
  gd.order = scheme.decode_order;
  if (snr_order) {
    std::stable_sort(gd.order.begin(), gd.order.end(), [&](std::size_t a, std::size_t b) {
      return eq.user[a].frobenius_norm() > eq.user[b].frobenius_norm();
    });
  }
  gd.users.resize(eq.K);
  for (std::size_t pos = 0; pos < gd.order.size(); ++pos) {
    const std::size_t l = gd.order[pos];
    UserDecoder& ud = gd.users[l];
    ud.projection = build_projection(eq, interferer_set(gd.order, pos, gd.K, mode));
    ud.projected = ud.projection * eq.user_rot[l];
    const QrFactors f = qr_decompose(ud.projected);
    ud.q1 = f.q;
    ud.max_imag_r = f.r.max_abs_imag();
    ud.r_real.assign(gd.n * gd.n, 0.0);
    for (std::size_t i = 0; i < gd.n; ++i)
      for (std::size_t j = i; j < gd.n; ++j) ud.r_real[i * gd.n + j] = f.r(i, j).real();

    // When the projector's corank is below n (interference-heavy single-
    // antenna configurations), the projected channel is rank deficient and
    // the trailing rows of R carry only rounding noise. Zero them exactly:
    // the search then treats those levels as metric-constant enumeration.
    // Columns in generic position vanish from the top of the staircase, so
    // a deficient row with significant off-diagonal mass means the input
    // was degenerate in a way decoding cannot absorb.
    double dmax = 0.0;
    for (std::size_t i = 0; i < gd.n; ++i)
      dmax = std::max(dmax, ud.r_real[i * gd.n + i]);
    const double dead = 1e-8 * std::max(1.0, dmax);
    for (std::size_t i = 0; i < gd.n; ++i) {
      if (ud.r_real[i * gd.n + i] > dead) continue;
      for (std::size_t j = i; j < gd.n; ++j) {
        if (std::abs(ud.r_real[i * gd.n + j]) > 1e-6 * std::max(1.0, dmax))
          throw SingularError("group decoder: non-generic rank deficiency");
        ud.r_real[i * gd.n + j] = 0.0;
      }
    }
  }
  return gd;
}

struct UserDecodeResult {
  std::vector<std::uint32_t> sym;  // constellation indices, length n
  double objective = 0.0;          // || P_l y - F_l s^ ||
  SearchStats stats;
};

namespace detail {

inline double projected_objective(const UserDecoder& ud, const CVector& py,
                                  const QamConstellation& constell,
                                  const std::vector<std::uint32_t>& sym) {
  CVector r = py;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const cplx s = constell.point(sym[i]);
    const cplx* col = ud.projected.col_data(i);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= col[k] * s;
  }
  return vec_norm(r);
}

}  // namespace detail

// Decoupled path: one real sphere search over the real axis, one over the
// imaginary axis, recombined into constellation indices.
inline UserDecodeResult decode_decoupled(const GroupDecoder& gd, std::size_t user,
                                         const CVector& y, const QamConstellation& constell,
                                         const SphereOptions& opts = {}) {
  if (!constell.rectangular())
    throw PreconditionError("decode_decoupled: constellation must be rectangular");
  const UserDecoder& ud = gd.users[user];
  const CVector py = ud.projection * y;
  const CVector z = adjoint_times(ud.q1, py);

  LatticeProblem re, im;
  re.n = im.n = gd.n;
  re.r = im.r = ud.r_real;
  re.z.resize(gd.n);
  im.z.resize(gd.n);
  for (std::size_t i = 0; i < gd.n; ++i) {
    re.z[i] = z[i].real();
    im.z[i] = z[i].imag();
  }
  re.alphabets.assign(gd.n, constell.re_axis());
  im.alphabets.assign(gd.n, constell.im_axis());

  const SearchResult sre = sphere_search(re, opts);
  const SearchResult sim = sphere_search(im, opts);

  UserDecodeResult out;
  out.sym.resize(gd.n);
  for (std::size_t i = 0; i < gd.n; ++i)
    out.sym[i] = constell.index_of(sre.idx[i], sim.idx[i]);
  out.stats.visited_nodes = sre.stats.visited_nodes + sim.stats.visited_nodes;
  out.stats.leaf_visits = sre.stats.leaf_visits + sim.stats.leaf_visits;
  out.stats.leaf_updates = sre.stats.leaf_updates + sim.stats.leaf_updates;
  out.objective = detail::projected_objective(ud, py, constell, out.sym);
  return out;
}

// Exhaustive oracle over the full complex codebook A^n, lexicographic
// enumeration by symbol index with strict improvement.
inline UserDecodeResult decode_joint(const GroupDecoder& gd, std::size_t user,
                                     const CVector& y, const QamConstellation& constell,
                                     std::uint64_t cap = 1000000) {
  const UserDecoder& ud = gd.users[user];
  const std::size_t n = gd.n;
  const std::uint64_t q = constell.order();
  std::uint64_t space = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (space > cap / q) throw CapExceededError("decode_joint: codebook exceeds cap");
    space *= q;
  }

  const CVector py = ud.projection * y;
  std::vector<std::uint32_t> odo(n, 0);
  UserDecodeResult out;
  out.sym.assign(n, 0);
  double best_sq = std::numeric_limits<double>::infinity();
  CVector resid(py.size());
  for (;;) {
    resid = py;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx s = constell.point(odo[i]);
      const cplx* col = ud.projected.col_data(i);
      for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= col[k] * s;
    }
    const double obj = norm2(resid);
    ++out.stats.visited_nodes;
    ++out.stats.leaf_visits;
    if (obj < best_sq) {
      best_sq = obj;
      out.sym = odo;
      ++out.stats.leaf_updates;
    }
    std::size_t k = n;
    while (k > 0) {
      if (++odo[k - 1] < q) break;
      odo[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  out.objective = std::sqrt(best_sq);
  return out;
}

struct AllDecodeResult {
  std::vector<UserDecodeResult> user;  // indexed by user

  SearchStats total_stats() const {
    SearchStats s;
    for (const auto& u : user) {
      s.visited_nodes += u.stats.visited_nodes;
      s.leaf_visits += u.stats.leaf_visits;
      s.leaf_updates += u.stats.leaf_updates;
    }
    return s;
  }
};

// Decode every user. PICGD decodes each user independently from the raw
// received vector; PICGD-SIC walks the decode order, subtracting each
// decoded contribution from the residual before the next stage.
// `use_joint_oracle` swaps the decoupled search for the exhaustive one
// (identical answers, used for certification).
inline AllDecodeResult decode_all(const GroupDecoder& gd, const EquivalentChannel& eq,
                                  const CVector& y, const QamConstellation& constell,
                                  bool use_joint_oracle = false,
                                  const SphereOptions& opts = {}) {
  AllDecodeResult out;
  out.user.resize(gd.K);
  auto decode_one = [&](std::size_t l, const CVector& obs) {
    return use_joint_oracle ? decode_joint(gd, l, obs, constell)
                            : decode_decoupled(gd, l, obs, constell, opts);
  };
  if (gd.mode == DecoderMode::Picgd) {
    for (std::size_t l = 0; l < gd.K; ++l) out.user[l] = decode_one(l, y);
    return out;
  }
  CVector resid = y;
  for (std::size_t pos = 0; pos < gd.order.size(); ++pos) {
    const std::size_t l = gd.order[pos];
    out.user[l] = decode_one(l, resid);
    if (pos + 1 == gd.order.size()) break;
    for (std::size_t i = 0; i < gd.n; ++i) {
      const cplx s = constell.point(out.user[l].sym[i]);
      const cplx* col = eq.user_rot[l].col_data(i);
      for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= col[k] * s;
    }
  }
  return out;
}

// Joint maximum-likelihood over all users at once (no projection), by
// exhaustive enumeration of the q^{Kn} product codebook. Exact but only
// meant for small configurations and cross-checks; capped.
inline AllDecodeResult decode_ml_joint(const EquivalentChannel& eq, const CVector& y,
                                       const QamConstellation& constell,
                                       std::uint64_t cap = (1u << 20)) {
  const std::size_t kn = eq.K * eq.n;
  const std::uint64_t q = constell.order();
  std::uint64_t space = 1;
  for (std::size_t i = 0; i < kn; ++i) {
    if (space > cap / q) throw CapExceededError("decode_ml_joint: codebook exceeds cap");
    space *= q;
  }

  std::vector<std::uint32_t> odo(kn, 0), best(kn, 0);
  double best_sq = std::numeric_limits<double>::infinity();
  std::uint64_t evals = 0, updates = 0;
  CVector resid(y.size());
  for (;;) {
    resid = y;
    for (std::size_t k = 0; k < eq.K; ++k)
      for (std::size_t i = 0; i < eq.n; ++i) {
        const cplx s = constell.point(odo[k * eq.n + i]);
        const cplx* col = eq.user_rot[k].col_data(i);
        for (std::size_t r = 0; r < resid.size(); ++r) resid[r] -= col[r] * s;
      }
    const double obj = norm2(resid);
    ++evals;
    if (obj < best_sq) {
      best_sq = obj;
      best = odo;
      ++updates;
    }
    std::size_t k = kn;
    while (k > 0) {
      if (++odo[k - 1] < q) break;
      odo[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }

  AllDecodeResult out;
  out.user.resize(eq.K);
  for (std::size_t k = 0; k < eq.K; ++k) {
    out.user[k].sym.assign(best.begin() + static_cast<std::ptrdiff_t>(k * eq.n),
                           best.begin() + static_cast<std::ptrdiff_t>((k + 1) * eq.n));
    out.user[k].objective = std::sqrt(best_sq);
  }
  out.user[0].stats.visited_nodes = evals;
  out.user[0].stats.leaf_visits = evals;
  out.user[0].stats.leaf_updates = updates;
  return out;
}

}  // namespace icmac
