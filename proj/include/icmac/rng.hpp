// SPDX-License-Identifier: Apache-2.0
//
// Seedable, splittable PRNG used everywhere randomness is needed.
//
// Contract: the same seed always produces the same stream, on any worker and
// in any trial order. Per-trial sub-streams are derived with derive_seed()
// so results never depend on thread scheduling. Gaussian variates come from
// an explicit Box-Muller transform rather than std::normal_distribution,
// whose output is implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>

namespace icmac {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Derive an independent sub-seed from a master seed and up to three indices
// (SNR point, trial, retry attempt). Pure splitmix avalanche chain.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  (void)detail::splitmix64(s);
  s ^= detail::splitmix64(s) + a;
  s ^= detail::splitmix64(s) + b;
  s ^= detail::splitmix64(s) + c;
  return detail::splitmix64(s);
}

// xoshiro256++ with splitmix64 seeding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Unbiased via rejection; exact (single draw)
  // when n is a power of two, which covers every supported QAM order.
  std::uint32_t uniform_below(std::uint32_t n) {
    if ((n & (n - 1)) == 0) return static_cast<std::uint32_t>(next_u64() & (n - 1));
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::uint32_t>(x % n);
  }

  // Standard normal, Box-Muller, pairs cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = 1.0 - uniform01();  // (0, 1], keeps log() finite
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * 3.14159265358979323846 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace icmac
