// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra for small matrices (everything in this
// project is at most a few dozen rows). Column-major storage throughout.
//
// Decompositions:
//   qr_decompose    thin Householder QR, R diagonal forced real non-negative
//   cholesky        tolerance-aware L·L^H for Hermitian PSD inputs
//   svd             one-sided Jacobi, singular values sorted descending
//   pseudo_inverse  Moore-Penrose via SVD (well-defined for any shape/rank)
//   rank_tol        numerical rank from singular values
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <vector>

#include "icmac/errors.hpp"

namespace icmac {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline constexpr double kDefaultRankTol = 1e-10;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), e_(rows * cols) {}

  static CMatrix identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  // Row-wise initializer for literals in tests and fixtures. Validates the
  // construction invariant: every entry finite.
  static CMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    CMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("from_rows: ragged rows");
      std::size_t j = 0;
      for (const cplx& v : row) m(i, j++) = v;
      ++i;
    }
    if (!m.all_finite()) throw PreconditionError("from_rows: non-finite entry");
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return e_.empty(); }

  cplx& operator()(std::size_t i, std::size_t j) { return e_[j * rows_ + i]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return e_[j * rows_ + i]; }

  cplx* col_data(std::size_t j) { return e_.data() + j * rows_; }
  const cplx* col_data(std::size_t j) const { return e_.data() + j * rows_; }

  CVector col(std::size_t j) const {
    return CVector(col_data(j), col_data(j) + rows_);
  }
  void set_col(std::size_t j, const CVector& v) {
    std::copy(v.begin(), v.end(), col_data(j));
  }

  CMatrix adjoint() const {
    CMatrix a(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) a(j, i) = std::conj((*this)(i, j));
    return a;
  }

  CMatrix transpose() const {
    CMatrix t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const cplx& v : e_) s += std::norm(v);
    return std::sqrt(s);
  }

  double max_abs() const {
    double s = 0.0;
    for (const cplx& v : e_) s = std::max(s, std::abs(v));
    return s;
  }

  double max_abs_imag() const {
    double s = 0.0;
    for (const cplx& v : e_) s = std::max(s, std::abs(v.imag()));
    return s;
  }

  bool all_finite() const {
    for (const cplx& v : e_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  CMatrix& operator+=(const CMatrix& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
    return *this;
  }
  CMatrix& operator*=(cplx a) {
    for (cplx& v : e_) v *= a;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("matmul: inner dimensions differ");
    CMatrix c(a.rows_, b.cols_);
    for (std::size_t j = 0; j < b.cols_; ++j) {
      cplx* cj = c.col_data(j);
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx bkj = b(k, j);
        if (bkj == cplx(0.0)) continue;
        const cplx* ak = a.col_data(k);
        for (std::size_t i = 0; i < a.rows_; ++i) cj[i] += ak[i] * bkj;
      }
    }
    return c;
  }

  CVector operator*(const CVector& x) const {
    if (cols_ != x.size()) throw DimensionError("matvec: length mismatch");
    CVector y(rows_, cplx(0.0));
    for (std::size_t j = 0; j < cols_; ++j) {
      const cplx xj = x[j];
      if (xj == cplx(0.0)) continue;
      const cplx* aj = col_data(j);
      for (std::size_t i = 0; i < rows_; ++i) y[i] += aj[i] * xj;
    }
    return y;
  }

 private:
  void require_same_shape(const CMatrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError(what);
  }

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cplx> e_;
};

// ---- small vector helpers -------------------------------------------------

inline cplx dot(const CVector& a, const CVector& b) {  // a^H b
  cplx s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(const CVector& a) {
  double s = 0.0;
  for (const cplx& v : a) s += std::norm(v);
  return s;
}

inline double vec_norm(const CVector& a) { return std::sqrt(norm2(a)); }

inline CVector operator-(CVector a, const CVector& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline CVector operator+(CVector a, const CVector& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

// a^H * b without forming the adjoint.
inline CMatrix adjoint_times(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("adjoint_times: row mismatch");
  CMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      cplx s(0.0);
      const cplx* ai = a.col_data(i);
      const cplx* bj = b.col_data(j);
      for (std::size_t r = 0; r < a.rows(); ++r) s += std::conj(ai[r]) * bj[r];
      c(i, j) = s;
    }
  return c;
}

inline CVector adjoint_times(const CMatrix& a, const CVector& y) {
  if (a.rows() != y.size()) throw DimensionError("adjoint_times: length mismatch");
  CVector z(a.cols(), cplx(0.0));
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const cplx* aj = a.col_data(j);
    cplx s(0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) s += std::conj(aj[r]) * y[r];
    z[j] = s;
  }
  return z;
}

inline CMatrix hstack(const CMatrix& a, const CMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
  CMatrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    std::copy(a.col_data(j), a.col_data(j) + a.rows(), c.col_data(j));
  for (std::size_t j = 0; j < b.cols(); ++j)
    std::copy(b.col_data(j), b.col_data(j) + b.rows(), c.col_data(a.cols() + j));
  return c;
}

inline CMatrix vstack(const CMatrix& a, const CMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  CMatrix c(a.rows() + b.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    std::copy(a.col_data(j), a.col_data(j) + a.rows(), c.col_data(j));
    std::copy(b.col_data(j), b.col_data(j) + b.rows(), c.col_data(j) + a.rows());
  }
  return c;
}

// ---- QR -------------------------------------------------------------------

struct QrFactors {
  CMatrix q;  // rows×cols, orthonormal columns
  CMatrix r;  // cols×cols upper triangular, real non-negative diagonal
};

// Thin Householder QR. The diagonal of R is phase-normalized to be real and
// non-negative so that the triangular factor of a decoupling-friendly channel
// comes out real (the decoders rely on this).
inline QrFactors qr_decompose(const CMatrix& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (rows < cols) throw DimensionError("qr_decompose: requires rows >= cols");

  CMatrix a = m;
  // Householder vectors (unit leading entry not enforced; store full u and
  // gamma = 2/||u||^2).
  std::vector<CVector> us(cols);
  std::vector<double> gammas(cols, 0.0);

  for (std::size_t k = 0; k < cols; ++k) {
    double s2 = 0.0;
    for (std::size_t i = k; i < rows; ++i) s2 += std::norm(a(i, k));
    const double s = std::sqrt(s2);
    if (s == 0.0) continue;  // zero column, nothing to reflect

    const cplx x0 = a(k, k);
    const double ax0 = std::abs(x0);
    const cplx phase = ax0 == 0.0 ? cplx(1.0) : x0 / ax0;

    CVector u(rows - k);
    for (std::size_t i = k; i < rows; ++i) u[i - k] = a(i, k);
    u[0] += phase * s;  // u = x + e^{i arg(x0)} ||x|| e1  (avoids cancellation)
    const double un2 = 2.0 * s * (s + ax0);
    if (un2 == 0.0) continue;
    const double gamma = 2.0 / un2;

    for (std::size_t j = k; j < cols; ++j) {
      cplx c(0.0);
      for (std::size_t i = k; i < rows; ++i) c += std::conj(u[i - k]) * a(i, j);
      c *= gamma;
      for (std::size_t i = k; i < rows; ++i) a(i, j) -= c * u[i - k];
    }
    us[k] = std::move(u);
    gammas[k] = gamma;
  }

  QrFactors f;
  f.r = CMatrix(cols, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i <= j; ++i) f.r(i, j) = a(i, j);

  // Q = H_0 ... H_{cols-1} applied to the leading columns of the identity.
  f.q = CMatrix(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) f.q(j, j) = 1.0;
  for (std::size_t k = cols; k-- > 0;) {
    if (gammas[k] == 0.0) continue;
    const CVector& u = us[k];
    for (std::size_t j = 0; j < cols; ++j) {
      cplx c(0.0);
      for (std::size_t i = k; i < rows; ++i) c += std::conj(u[i - k]) * f.q(i, j);
      c *= gammas[k];
      for (std::size_t i = k; i < rows; ++i) f.q(i, j) -= c * u[i - k];
    }
  }

  // Phase normalization: fold e^{i arg(R_kk)} into Q so R_kk = |R_kk| >= 0.
  for (std::size_t k = 0; k < cols; ++k) {
    const cplx d = f.r(k, k);
    const double ad = std::abs(d);
    if (ad > 0.0) {
      const cplx ph = d / ad;
      const cplx phc = std::conj(ph);
      for (std::size_t j = k; j < cols; ++j) f.r(k, j) *= phc;
      for (std::size_t i = 0; i < rows; ++i) f.q(i, k) *= ph;
    }
    f.r(k, k) = cplx(ad, 0.0);  // imaginary part exactly zero
  }
  return f;
}

// ---- Cholesky ---------------------------------------------------------------

// L·L^H factorization of a Hermitian positive semi-definite matrix. Pivots
// within tolerance of zero are treated as exactly zero (semidefinite inputs
// arise from projected Grams); a pivot negative beyond tolerance throws.
inline CMatrix cholesky(const CMatrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionError("cholesky: square matrix required");

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m(i, i)));
  const double herm_tol = 1e-8 * std::max(1.0, scale);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > herm_tol)
        throw PreconditionError("cholesky: matrix not Hermitian within tolerance");

  // Semidefinite inputs (rank-deficient Grams) leave pivots that wiggle a
  // few hundred ulps negative after cancellation; the tolerance matches the
  // library-wide 1e-10 rank scale rather than raw machine epsilon.
  const double pivot_tol = 1e-10 * static_cast<double>(n) * std::max(1.0, scale);

  CMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (d < -pivot_tol) throw NotPsdError("cholesky: negative pivot, input not PSD");
    if (d <= pivot_tol) {
      l(j, j) = 0.0;  // semidefinite direction; column stays zero
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return l;
}

// ---- SVD --------------------------------------------------------------------

struct SvdFactors {
  CMatrix u;                  // rows×k with k = min(rows, cols); zero columns for zero σ
  std::vector<double> sigma;  // descending, length k
  CMatrix v;                  // cols×k
};

namespace detail {

// One-sided Jacobi on the columns of a (rows >= cols assumed by caller).
// Returns singular values unsorted; u/v accumulated when requested.
inline void jacobi_svd_core(CMatrix& a, CMatrix* v, std::vector<double>& sigma) {
  const std::size_t rows = a.rows(), cols = a.cols();
  const double eps = 1e-14;
  const int max_sweeps = 80;

  bool rotated = true;
  int sweep = 0;
  while (rotated) {
    if (++sweep > max_sweeps) throw ConvergenceError("svd: Jacobi sweeps exhausted");
    rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        cplx* ap = a.col_data(p);
        cplx* aq = a.col_data(q);
        double app = 0.0, aqq = 0.0;
        cplx apq(0.0);
        for (std::size_t i = 0; i < rows; ++i) {
          app += std::norm(ap[i]);
          aqq += std::norm(aq[i]);
          apq += std::conj(ap[i]) * aq[i];
        }
        const double off = std::abs(apq);
        if (off <= eps * std::sqrt(app * aqq) || app == 0.0 || aqq == 0.0) continue;
        rotated = true;

        // Make the cross term real by rotating column q's phase, then apply a
        // real Jacobi rotation that orthogonalizes the pair.
        const cplx phc = std::conj(apq / off);
        const double tau = (aqq - app) / (2.0 * off);
        const double t = tau == 0.0
                             ? 1.0
                             : (tau > 0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;

        for (std::size_t i = 0; i < rows; ++i) {
          const cplx qi = aq[i] * phc;
          const cplx pi = ap[i];
          ap[i] = c * pi - s * qi;
          aq[i] = s * pi + c * qi;
        }
        if (v) {
          cplx* vp = v->col_data(p);
          cplx* vq = v->col_data(q);
          for (std::size_t i = 0; i < cols; ++i) {
            const cplx qi = vq[i] * phc;
            const cplx pi = vp[i];
            vp[i] = c * pi - s * qi;
            vq[i] = s * pi + c * qi;
          }
        }
      }
    }
  }

  sigma.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s2 = 0.0;
    const cplx* aj = a.col_data(j);
    for (std::size_t i = 0; i < rows; ++i) s2 += std::norm(aj[i]);
    sigma[j] = std::sqrt(s2);
  }
}

}  // namespace detail

inline SvdFactors svd(const CMatrix& m) {
  if (m.rows() < m.cols()) {
    SvdFactors s = svd(m.adjoint());
    return SvdFactors{std::move(s.v), std::move(s.sigma), std::move(s.u)};
  }
  CMatrix a = m;
  SvdFactors f;
  f.v = CMatrix::identity(m.cols());
  detail::jacobi_svd_core(a, &f.v, f.sigma);

  std::vector<std::size_t> order(m.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return f.sigma[x] > f.sigma[y]; });

  SvdFactors out;
  out.u = CMatrix(m.rows(), m.cols());
  out.v = CMatrix(m.cols(), m.cols());
  out.sigma.resize(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = f.sigma[src];
    out.v.set_col(j, f.v.col(src));
    if (f.sigma[src] > 0.0) {
      CVector col = a.col(src);
      for (cplx& x : col) x /= f.sigma[src];
      out.u.set_col(j, col);
    }
  }
  return out;
}

// Singular values only (faster path for rank queries).
inline std::vector<double> singular_values(const CMatrix& m) {
  CMatrix a = m.rows() >= m.cols() ? m : m.adjoint();
  std::vector<double> sigma;
  detail::jacobi_svd_core(a, nullptr, sigma);
  std::sort(sigma.begin(), sigma.end(), std::greater<double>());
  return sigma;
}

// Number of singular values above rel_tol * max(rows, cols) * sigma_max.
// A numerically zero matrix has rank 0.
inline std::size_t rank_tol(const CMatrix& m, double rel_tol = kDefaultRankTol) {
  if (rel_tol <= 0.0) throw PreconditionError("rank_tol: rel_tol must be positive");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const std::vector<double> sigma = singular_values(m);
  const double cutoff =
      rel_tol * static_cast<double>(std::max(m.rows(), m.cols())) * sigma.front();
  std::size_t r = 0;
  for (double s : sigma)
    if (s > cutoff) ++r;
  return r;
}

// Moore-Penrose pseudo-inverse via SVD; defined for every shape and rank.
inline CMatrix pseudo_inverse(const CMatrix& m, double rel_tol = kDefaultRankTol) {
  CMatrix p(m.cols(), m.rows());
  if (m.rows() == 0 || m.cols() == 0) return p;
  const SvdFactors f = svd(m);
  const double cutoff =
      rel_tol * static_cast<double>(std::max(m.rows(), m.cols())) * (f.sigma.empty() ? 0.0 : f.sigma.front());
  for (std::size_t k = 0; k < f.sigma.size(); ++k) {
    if (f.sigma[k] <= cutoff || f.sigma[k] == 0.0) break;  // sorted descending
    const double inv = 1.0 / f.sigma[k];
    const cplx* uk = f.u.col_data(k);
    const cplx* vk = f.v.col_data(k);
    for (std::size_t j = 0; j < m.rows(); ++j) {
      const cplx w = inv * std::conj(uk[j]);
      for (std::size_t i = 0; i < m.cols(); ++i) p(i, j) += vk[i] * w;
    }
  }
  return p;
}

// ---- Kronecker / vec --------------------------------------------------------

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ja = 0; ja < a.cols(); ++ja)
    for (std::size_t ia = 0; ia < a.rows(); ++ia) {
      const cplx w = a(ia, ja);
      if (w == cplx(0.0)) continue;
      for (std::size_t jb = 0; jb < b.cols(); ++jb)
        for (std::size_t ib = 0; ib < b.rows(); ++ib)
          k(ia * b.rows() + ib, ja * b.cols() + jb) = w * b(ib, jb);
    }
  return k;
}

// Stack columns vertically into one column vector.
inline CVector vec(const CMatrix& m) {
  CVector v;
  v.reserve(m.rows() * m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    v.insert(v.end(), m.col_data(j), m.col_data(j) + m.rows());
  return v;
}

}  // namespace icmac
