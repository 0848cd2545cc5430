#include "sinrlab/shot_noise.hpp"

#include "doctest.h"

#include <cmath>
#include <complex>
#include <utility>

using namespace sinrlab;
using cd = std::complex<double>;

TEST_CASE("single jump size is a compound Poisson exponent") {
  // N ~ Poisson(w) jumps of size L: log E[X^s] = -s shift - w (1 - e^{-s L}).
  const double shift = 0.05, w = 0.7, l = 0.3;
  ShotNoiseBuilder b(shift);
  b.add(l, w);
  const ShotNoiseExponent e = b.build();
  for (cd s : {cd(1.0, 0.0), cd(2.5, 0.0), cd(0.0, 0.4), cd(0.0, 7.0), cd(0.0, 60.0)}) {
    const cd want = -s * shift - w * (1.0 - std::exp(-s * l));
    CHECK(std::abs(e(s) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }
  CHECK(e.shift() == shift);
  CHECK(e.mean_jump_integral() == doctest::Approx(w * l).epsilon(1e-12));
}

TEST_CASE("continuous jump density") {
  // nu(dL) = dL on [0.1, 1]: int (1 - e^{-sL}) dL = 0.9 - (e^{-0.1 s} - e^{-s}) / s.
  ShotNoiseBuilder b(0.0);
  const int n = 20000;
  const double h = 0.9 / n;
  for (int i = 0; i < n; ++i) b.add(0.1 + (i + 0.5) * h, h);
  const ShotNoiseExponent e = b.build();
  // Within-bin dispersion is carried to second order only, so the error
  // grows once omega times the bin width (about 5% of L) approaches one.
  const std::pair<double, double> cases[] = {{0.1, 1e-8}, {1.0, 1e-7}, {5.0, 2e-6}, {20.0, 5e-5}};
  for (const auto& [w, tol] : cases) {
    const cd s(0.0, w);
    const cd want = -(0.9 - (std::exp(-0.1 * s) - std::exp(-s)) / s);
    CHECK(std::abs(e(s) - want) <= tol);
  }
  CHECK(e.mean_jump_integral() == doctest::Approx(0.5 * (1.0 - 0.01)).epsilon(1e-6));
  CHECK(e.significant_jump() == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("sub-resolution jumps enter through their moments") {
  ShotNoiseBuilder b(0.0, 1e-3);
  b.add(1e-5, 100.0);  // below min_jump
  b.add_moments(0.002, 1e-7);
  const ShotNoiseExponent e = b.build();
  const double m1 = 100.0 * 1e-5 + 0.002;
  const double m2 = 100.0 * 1e-10 + 1e-7;
  for (double w : {0.5, 5.0}) {
    const cd s(0.0, w);
    // Second-order cumulant expansion of int (1 - e^{-sL}) nu(dL).
    const cd want = -(s * m1 - 0.5 * s * s * m2);
    CHECK(std::abs(e(s) - want) <= 1e-9);
  }
  CHECK(e.mean_jump_integral() == doctest::Approx(m1).epsilon(1e-12));
}

TEST_CASE("exponent is conjugate symmetric and vanishes at zero") {
  ShotNoiseBuilder b(0.01);
  for (double l : {0.001, 0.01, 0.1, 1.0, 10.0}) b.add(l, 0.2);
  const ShotNoiseExponent e = b.build();
  CHECK(std::abs(e(cd(0.0, 0.0))) < 1e-15);
  for (double w : {0.01, 1.0, 40.0}) {
    const cd a = e.at_omega(w);
    const cd c = e(cd(0.0, -w));
    CHECK(std::abs(a - std::conj(c)) < 1e-13);
    CHECK(a.real() <= 1e-15);  // |E[X^{jw}]| <= 1
  }
  const auto f = e.log_mgf();
  CHECK(std::abs(f(2.0) - e.at_omega(2.0)) < 1e-15);
}

TEST_CASE("builder rejects bad input") {
  CHECK_THROWS_AS(ShotNoiseBuilder(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ShotNoiseBuilder(0.0, 1.0, 0.5), std::invalid_argument);
  ShotNoiseBuilder b;
  b.add(-1.0, 1.0);  // ignored
  b.add(0.5, 0.0);   // ignored
  CHECK(b.build().bins() == 0);
}
