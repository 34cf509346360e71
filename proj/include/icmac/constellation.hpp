// SPDX-License-Identifier: Apache-2.0
//
// Rectangular QAM alphabets with per-axis Gray labels, unit average energy,
// and the Eb/N0 -> N0 mapping used by the simulator.
//
// Energy/noise conventions (the decoders and the CER curves depend on them):
//   * constellations are normalized to unit average energy per point;
//   * Eb is counted per user from that user's spectral efficiency
//     (scheme rate in symbols per channel use times bits per symbol);
//   * noise is per complex receive dimension with total variance N0, so
//     N0 = 1 / (rate * bits_per_symbol * 10^(EbN0_dB/10)).
// This choice only shifts CER curves horizontally; slopes are unaffected.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "icmac/errors.hpp"
#include "icmac/matcore.hpp"

namespace icmac {

// Rectangular QAM: the point set is the exact product of a real and an
// imaginary PAM grid. Point index = re_index * im_count + im_index, axes
// ascending; that ordering is the library-wide lexicographic tie-break.
class QamConstellation {
 public:
  QamConstellation() = default;  // empty; fill via make_qam

  unsigned order() const { return static_cast<unsigned>(points_.size()); }
  unsigned bits_per_symbol() const { return bits_; }
  double avg_energy() const { return avg_energy_; }

  const std::vector<cplx>& points() const { return points_; }
  const std::vector<double>& re_axis() const { return re_axis_; }
  const std::vector<double>& im_axis() const { return im_axis_; }
  std::size_t re_count() const { return re_axis_.size(); }
  std::size_t im_count() const { return im_axis_.size(); }

  cplx point(std::uint32_t idx) const { return points_[idx]; }
  std::uint32_t index_of(std::uint32_t re_idx, std::uint32_t im_idx) const {
    return re_idx * static_cast<std::uint32_t>(im_axis_.size()) + im_idx;
  }
  std::uint32_t re_index(std::uint32_t idx) const {
    return idx / static_cast<std::uint32_t>(im_axis_.size());
  }
  std::uint32_t im_index(std::uint32_t idx) const {
    return idx % static_cast<std::uint32_t>(im_axis_.size());
  }

  // Gray label: per-axis Gray codes concatenated (real axis in the high bits).
  std::uint32_t bit_label(std::uint32_t idx) const { return labels_[idx]; }

  bool rectangular() const { return true; }  // holds by construction

  // Distinct pairwise coordinate differences along one axis, including 0.
  static std::vector<double> axis_differences(const std::vector<double>& axis) {
    std::vector<double> d;
    for (double a : axis)
      for (double b : axis) d.push_back(a - b);
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-12; }),
            d.end());
    return d;
  }

  // Distinct pairwise symbol differences (complex), including 0.
  std::vector<cplx> symbol_differences() const {
    const std::vector<double> dre = axis_differences(re_axis_);
    const std::vector<double> dim = axis_differences(im_axis_);
    std::vector<cplx> d;
    d.reserve(dre.size() * dim.size());
    for (double a : dre)
      for (double b : dim) d.emplace_back(a, b);
    return d;
  }

  friend QamConstellation make_qam(unsigned q);
  friend QamConstellation single_point_constellation(cplx p);

 private:
  void finalize() {
    points_.clear();
    labels_.clear();
    const unsigned im_bits = bit_width(static_cast<unsigned>(im_axis_.size()));
    for (std::size_t i = 0; i < re_axis_.size(); ++i)
      for (std::size_t j = 0; j < im_axis_.size(); ++j) {
        points_.emplace_back(re_axis_[i], im_axis_[j]);
        labels_.push_back((gray(static_cast<unsigned>(i)) << im_bits) |
                          gray(static_cast<unsigned>(j)));
      }
    bits_ = bit_width(static_cast<unsigned>(points_.size()));
    double e = 0.0;
    for (const cplx& p : points_) e += std::norm(p);
    avg_energy_ = e / static_cast<double>(points_.size());
  }

  static unsigned gray(unsigned k) { return k ^ (k >> 1); }
  static unsigned bit_width(unsigned n) {
    unsigned b = 0;
    while ((1u << b) < n) ++b;
    return b;
  }

  std::vector<cplx> points_;
  std::vector<double> re_axis_, im_axis_;
  std::vector<std::uint32_t> labels_;
  unsigned bits_ = 0;
  double avg_energy_ = 0.0;
};

// Build a unit-energy rectangular QAM. Square orders use M×M grids; q = 32
// uses an 8×4 grid (rectangular, not cross, so the real/imaginary
// factorization the decoupled decoder needs holds for every order).
inline QamConstellation make_qam(unsigned q) {
  switch (q) {
    case 4:
    case 16:
    case 32:
    case 64:
    case 256:
    case 1024:
      break;
    default:
      throw ConfigError("make_qam: unsupported order");
  }
  unsigned bits = 0;
  while ((1u << bits) < q) ++bits;
  const unsigned re_levels = 1u << ((bits + 1) / 2);
  const unsigned im_levels = 1u << (bits / 2);

  auto pam = [](unsigned m) {
    std::vector<double> axis(m);
    for (unsigned k = 0; k < m; ++k)
      axis[k] = static_cast<double>(2 * static_cast<int>(k) + 1 - static_cast<int>(m));
    return axis;
  };

  QamConstellation c;
  c.re_axis_ = pam(re_levels);
  c.im_axis_ = pam(im_levels);
  const double energy = (static_cast<double>(re_levels) * re_levels - 1.0) / 3.0 +
                        (static_cast<double>(im_levels) * im_levels - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& x : c.re_axis_) x *= scale;
  for (double& x : c.im_axis_) x *= scale;
  c.finalize();
  return c;
}

// Degenerate one-point alphabet for decoder edge-case tests.
inline QamConstellation single_point_constellation(cplx p) {
  QamConstellation c;
  c.re_axis_ = {p.real()};
  c.im_axis_ = {p.imag()};
  c.finalize();
  return c;
}

// N0 for a target Eb/N0 under the unit-average-symbol-energy convention.
// rate is in symbols per channel use.
inline double noise_variance_for_ebn0(double ebn0_db, double scheme_rate,
                                      unsigned bits_per_symbol) {
  if (scheme_rate <= 0.0) throw ConfigError("noise_variance_for_ebn0: rate must be positive");
  if (bits_per_symbol == 0) throw ConfigError("noise_variance_for_ebn0: bits must be positive");
  return 1.0 / (scheme_rate * static_cast<double>(bits_per_symbol) *
                std::pow(10.0, ebn0_db / 10.0));
}

}  // namespace icmac
