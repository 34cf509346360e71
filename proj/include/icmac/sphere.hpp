// SPDX-License-Identifier: Apache-2.0
//
// Exact closest-point search over a finite per-coordinate alphabet for
// real upper-triangular least squares: depth-first tree traversal with
// infinite initial radius, Schnorr-Euchner child ordering, and radius
// updates at every leaf. `exhaustive_search` is the independent oracle
// (plain odometer, full metric per candidate) used to certify exactness.
//
// Counting convention: a "visited node" is one partial Euclidean distance
// evaluation; a "leaf visit" is such an evaluation at the last coordinate.
// Absolute counts depend on this definition, so external complexity figures
// are compared qualitatively, not numerically.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "icmac/errors.hpp"

namespace icmac {

// min over x of || z - R x ||, x_i constrained to alphabets[i]. R is n×n
// upper triangular, row-major, with non-negative diagonal. Alphabet index
// order defines the lexicographic tie-break (coordinate 0 most significant).
//
// A diagonal entry may be exactly zero: that marks a structurally
// rank-deficient direction (the projected channel of an interference-heavy
// configuration). Such a level contributes a constant to the metric and is
// enumerated in index order; the coordinate is still pinned down through its
// off-diagonal couplings in rows above. Diagonal entries that are merely
// tiny are rejected, since they signal a numerically dubious factorization
// rather than deliberate deficiency.
struct LatticeProblem {
  std::size_t n = 0;
  std::vector<double> r;  // row-major n×n
  std::vector<double> z;
  std::vector<std::vector<double>> alphabets;

  double rr(std::size_t i, std::size_t j) const { return r[i * n + j]; }
};

struct SearchStats {
  std::uint64_t visited_nodes = 0;
  std::uint64_t leaf_visits = 0;
  std::uint64_t leaf_updates = 0;
};

enum class ChildOrdering { SchnorrEuchner, Natural };

struct SphereOptions {
  ChildOrdering ordering = ChildOrdering::SchnorrEuchner;
  bool prune = true;  // false forces a full-tree traversal (worst-case probes)
};

struct SearchResult {
  std::vector<std::uint32_t> idx;  // alphabet index per coordinate
  double objective_sq = 0.0;
  SearchStats stats;
};

// Full-tree visited-node count: sum over depths of the product of alphabet
// sizes from the bottom coordinate up. Saturates instead of overflowing.
inline std::uint64_t full_tree_node_bound(const LatticeProblem& p) {
  std::uint64_t total = 0, level = 1;
  const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t d = 0; d < p.n; ++d) {
    const std::uint64_t sz = p.alphabets[p.n - 1 - d].size();
    if (level > cap / sz) return cap;
    level *= sz;
    if (total > cap - level) return cap;
    total += level;
  }
  return total;
}

namespace detail {

inline void validate_problem(const LatticeProblem& p) {
  if (p.n == 0 || p.z.size() != p.n || p.alphabets.size() != p.n ||
      p.r.size() != p.n * p.n)
    throw PreconditionError("lattice problem: inconsistent dimensions");
  for (const auto& a : p.alphabets)
    if (a.empty()) throw PreconditionError("lattice problem: empty alphabet");
}

inline void require_regular_diagonal(const LatticeProblem& p) {
  double dmax = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) dmax = std::max(dmax, p.rr(i, i));
  const double tol = 1e-12 * std::max(1.0, dmax);
  for (std::size_t i = 0; i < p.n; ++i) {
    const double d = p.rr(i, i);
    if (d == 0.0) continue;  // explicit deficiency marker, legal
    if (d <= tol)
      throw SingularError("sphere_search: near-singular triangular factor");
  }
}

inline bool lex_less(const std::vector<std::uint32_t>& a,
                     const std::vector<std::uint32_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

struct SphereState {
  const LatticeProblem* p;
  SphereOptions opt;
  std::vector<std::uint32_t> current;
  std::vector<double> values;                       // chosen value per level
  std::vector<std::vector<std::uint32_t>> orderbuf;  // per-level child order
  std::vector<std::uint32_t> best;
  double best_sq = std::numeric_limits<double>::infinity();
  bool found = false;
  SearchStats stats;

  void descend(std::size_t level, double partial) {
    const std::size_t i = level;
    const auto& alphabet = p->alphabets[i];
    double b = p->z[i];
    for (std::size_t j = i + 1; j < p->n; ++j) b -= p->rr(i, j) * values[j];

    auto& order = orderbuf[i];
    order.resize(alphabet.size());
    for (std::uint32_t k = 0; k < alphabet.size(); ++k) order[k] = k;
    // Zero-diagonal level: every child has the same immediate metric, so
    // enumerate in index order (which is also the tie-break order).
    if (opt.ordering == ChildOrdering::SchnorrEuchner && p->rr(i, i) > 0.0) {
      const double center = b / p->rr(i, i);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t x, std::uint32_t y) {
                         const double dx = std::abs(alphabet[x] - center);
                         const double dy = std::abs(alphabet[y] - center);
                         if (dx != dy) return dx < dy;
                         return alphabet[x] < alphabet[y];
                       });
    }

    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::uint32_t k = order[pos];
      const double resid = b - p->rr(i, i) * alphabet[k];
      const double metric = partial + resid * resid;
      ++stats.visited_nodes;
      if (i == 0) ++stats.leaf_visits;
      if (opt.prune && metric > best_sq) {
        // Schnorr-Euchner children are sorted by metric: the rest of the
        // siblings can only be worse, so the whole level is done.
        if (opt.ordering == ChildOrdering::SchnorrEuchner) break;
        continue;
      }
      current[i] = k;
      if (i == 0) {
        if (metric < best_sq || (metric == best_sq && (!found || lex_less(current, best)))) {
          best_sq = metric;
          best = current;
          found = true;
          ++stats.leaf_updates;
        }
      } else {
        values[i] = alphabet[k];
        descend(i - 1, metric);
      }
    }
  }
};

}  // namespace detail

inline SearchResult sphere_search(const LatticeProblem& p,
                                  const SphereOptions& opt = {}) {
  detail::validate_problem(p);
  detail::require_regular_diagonal(p);

  detail::SphereState st;
  st.p = &p;
  st.opt = opt;
  st.current.assign(p.n, 0);
  st.values.assign(p.n, 0.0);
  st.orderbuf.resize(p.n);
  st.descend(p.n - 1, 0.0);

  SearchResult out{std::move(st.best), st.best_sq, st.stats};
  if (out.stats.visited_nodes < p.n || out.stats.visited_nodes > full_tree_node_bound(p))
    throw ConvergenceError("sphere_search: node accounting out of bounds");
  return out;
}

// Independent oracle: odometer over the full product space in lexicographic
// index order, full metric recomputed per candidate, strict improvement (so
// ties resolve to the lexicographically smallest index vector).
inline SearchResult exhaustive_search(const LatticeProblem& p,
                                      std::uint64_t cap = 1000000) {
  detail::validate_problem(p);
  std::uint64_t space = 1;
  for (const auto& a : p.alphabets) {
    if (space > cap / a.size())
      throw CapExceededError("exhaustive_search: candidate space exceeds cap");
    space *= a.size();
  }

  SearchResult out;
  out.idx.assign(p.n, 0);
  std::vector<std::uint32_t> odo(p.n, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    double obj = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) {
      // full-matrix residual: no triangularity assumed, so the oracle also
      // covers relabelled (column-permuted) problems
      double resid = p.z[i];
      for (std::size_t j = 0; j < p.n; ++j)
        resid -= p.rr(i, j) * p.alphabets[j][odo[j]];
      obj += resid * resid;
    }
    ++out.stats.visited_nodes;
    ++out.stats.leaf_visits;
    if (obj < best) {
      best = obj;
      out.idx = odo;
      ++out.stats.leaf_updates;
    }
    // last coordinate fastest: coordinate 0 is the most significant digit
    std::size_t k = p.n;
    while (k > 0) {
      if (++odo[k - 1] < p.alphabets[k - 1].size()) break;
      odo[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  out.objective_sq = best;
  return out;
}

}  // namespace icmac
