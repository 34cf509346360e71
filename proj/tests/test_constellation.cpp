// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "icmac/constellation.hpp"

using namespace icmac;

TEST_CASE("qpsk: points are (+-1 +-i)/sqrt(2)") {
  const QamConstellation c = make_qam(4);
  REQUIRE(c.order() == 4);
  const double a = 1.0 / std::sqrt(2.0);
  std::multiset<std::pair<double, double>> got, want;
  for (auto p : c.points()) got.insert({p.real(), p.imag()});
  for (double re : {-a, a})
    for (double im : {-a, a}) want.insert({re, im});
  for (auto itg = got.begin(), itw = want.begin(); itg != got.end(); ++itg, ++itw) {
    CHECK(itg->first == doctest::Approx(itw->first));
    CHECK(itg->second == doctest::Approx(itw->second));
  }
  CHECK(c.bits_per_symbol() == 2);
}

TEST_CASE("16-qam: axis is {-3,-1,1,3}/sqrt(10), normalized by direct summation") {
  const QamConstellation c = make_qam(16);
  const double s = 1.0 / std::sqrt(10.0);
  REQUIRE(c.re_axis().size() == 4);
  CHECK(c.re_axis()[0] == doctest::Approx(-3 * s));
  CHECK(c.re_axis()[1] == doctest::Approx(-1 * s));
  CHECK(c.re_axis()[2] == doctest::Approx(1 * s));
  CHECK(c.re_axis()[3] == doctest::Approx(3 * s));
  // independent oracle: direct (1/q) sum of |p|^2
  double e = 0.0;
  for (auto p : c.points()) e += std::norm(p);
  CHECK(e / 16.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("all supported orders: unit energy, distinct points, exact grid factorization") {
  for (unsigned q : {4u, 16u, 32u, 64u, 256u, 1024u}) {
    const QamConstellation c = make_qam(q);
    CHECK(c.order() == q);
    CHECK(c.avg_energy() == doctest::Approx(1.0).epsilon(1e-12));
    std::set<std::pair<double, double>> uniq;
    for (auto p : c.points()) uniq.insert({p.real(), p.imag()});
    CHECK(uniq.size() == q);
    // every (re, im) grid combination is present exactly once
    CHECK(c.re_count() * c.im_count() == q);
    for (std::uint32_t i = 0; i < q; ++i) {
      const cplx p = c.point(i);
      CHECK(p.real() == c.re_axis()[c.re_index(i)]);
      CHECK(p.imag() == c.im_axis()[c.im_index(i)]);
    }
  }
  CHECK(make_qam(32).re_count() == 8);  // rectangular 8x4 layout
  CHECK(make_qam(32).im_count() == 4);
}

TEST_CASE("gray labels: axis neighbours differ in exactly one bit") {
  for (unsigned q : {4u, 16u, 32u}) {
    const QamConstellation c = make_qam(q);
    auto popcount = [](std::uint32_t x) {
      int n = 0;
      while (x) {
        n += x & 1;
        x >>= 1;
      }
      return n;
    };
    for (std::uint32_t i = 0; i + 1 < c.re_count(); ++i)
      for (std::uint32_t j = 0; j < c.im_count(); ++j)
        CHECK(popcount(c.bit_label(c.index_of(i, j)) ^ c.bit_label(c.index_of(i + 1, j))) == 1);
    for (std::uint32_t i = 0; i < c.re_count(); ++i)
      for (std::uint32_t j = 0; j + 1 < c.im_count(); ++j)
        CHECK(popcount(c.bit_label(c.index_of(i, j)) ^ c.bit_label(c.index_of(i, j + 1))) == 1);
  }
}

TEST_CASE("noise_variance_for_ebn0: direct formula values") {
  CHECK(noise_variance_for_ebn0(0.0, 1.0, 2) == doctest::Approx(0.5));
  CHECK(noise_variance_for_ebn0(10.0, 3.0 / 5.0, 2) == doctest::Approx(1.0 / 12.0));
  // doubling bits per symbol halves N0 at fixed Eb/N0
  CHECK(noise_variance_for_ebn0(7.0, 0.5, 4) ==
        doctest::Approx(0.5 * noise_variance_for_ebn0(7.0, 0.5, 2)));
  // monotone decreasing in Eb/N0
  CHECK(noise_variance_for_ebn0(11.0, 1.0, 2) < noise_variance_for_ebn0(10.0, 1.0, 2));
  CHECK_THROWS_AS(noise_variance_for_ebn0(0.0, 0.0, 2), ConfigError);
}

TEST_CASE("unsupported order rejected") {
  CHECK_THROWS_AS(make_qam(8), ConfigError);
  CHECK_THROWS_AS(make_qam(0), ConfigError);
}
