#include <doctest.h>

#include <cmath>
#include <numbers>

#include "branchwave/spectral.hpp"

using namespace branchwave;

TEST_CASE("Bessel series agrees with the standard library") {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.0, 3.5})
    for (double x : {0.1, 1.0, 4.0, 9.5, 17.0, 25.0})
      CHECK(std::abs(bessel_j(nu, x) - std::cyl_bessel_j(nu, x)) <= 1e-11);
}

TEST_CASE("Bessel zeros match tabulated values") {
  CHECK(bessel_zero_oracle(0.0, 1) == doctest::Approx(2.404825557695773).epsilon(1e-12));
  CHECK(bessel_zero_oracle(1.0, 1) == doctest::Approx(3.831705970207512).epsilon(1e-12));
  CHECK(bessel_zero_oracle(0.5, 1) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK(bessel_zero_oracle(0.5, 3) == doctest::Approx(3.0 * std::numbers::pi).epsilon(1e-12));
  CHECK(bessel_zero_oracle(1.5, 1) == doctest::Approx(4.493409457909064).epsilon(1e-12));
  CHECK(bessel_zero_oracle(2.0, 1) == doctest::Approx(5.135622301840683).epsilon(1e-12));
}

TEST_CASE("disc levels come from half-integer orders on the double cover") {
  const auto levels = disc_spectrum_oracle(5);
  REQUIRE(levels.size() == 5);
  const double j01 = 2.404825557695773, j11 = 3.831705970207512;
  CHECK(levels[0].value == doctest::Approx(j01 * j01));
  CHECK(levels[0].multiplicity == 1);
  CHECK(levels[1].value == doctest::Approx(std::numbers::pi * std::numbers::pi));
  CHECK(levels[1].multiplicity == 2);
  CHECK(levels[2].value == doctest::Approx(j11 * j11));
  CHECK(levels[3].value == doctest::Approx(4.493409457909064 * 4.493409457909064));
  CHECK(levels[4].value == doctest::Approx(5.135622301840683 * 5.135622301840683));
  for (std::size_t k = 1; k < levels.size(); ++k) CHECK(levels[k].value > levels[k - 1].value);

  const RadialMode m = radial_mode(3, 2);
  CHECK(m.nu == doctest::Approx(1.5));
  CHECK(m.multiplicity == 2);
}

TEST_CASE("branched disc eigenvalues approach the oracle under refinement") {
  const auto levels = disc_spectrum_oracle(3);
  std::vector<double> oracle;
  for (const auto& l : levels)
    for (int m = 0; m < l.multiplicity; ++m) oracle.push_back(l.value);
  double prev = 1.0;
  for (double h : {1.0 / 8.0, 1.0 / 16.0}) {
    const EigenResult r = branched_disc_eigenvalues(build_branched_disc(h), 5);
    double err = 0.0;
    for (int k = 0; k < 5; ++k) {
      err = std::max(err, std::abs(r.values[k] / oracle[k] - 1.0));
      CHECK(r.residuals[k] <= 1e-6);
    }
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 0.03);
}

TEST_CASE("level clustering and power-law fits") {
  const auto c = cluster_levels({1.0, 2.0, 2.0000001, 3.0}, 1e-4);
  REQUIRE(c.size() == 3);
  CHECK(c[1].multiplicity == 2);

  std::vector<double> x, y;
  for (int k = 0; k < 10; ++k) {
    x.push_back(std::pow(10.0, 0.2 * k));
    y.push_back(5.0 * std::pow(x.back(), -3.5));
  }
  const DecayFit f = fit_power_law(x, y);
  CHECK(f.slope == doctest::Approx(-3.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(f.decades == doctest::Approx(1.8));
  CHECK(f.points == 10);
}

TEST_CASE("tail mass decays faster than (1 + st)^-3 for s >= 2a") {
  PacketSpec spec;
  spec.a = 1.0;
  spec.s = 2.0;
  std::vector<double> t;
  for (int k = 0; k < 12; ++k) t.push_back(8.0 * std::pow(125.0, k / 11.0));
  const TailDecay d = tail_mass_decay(spec, t);
  CHECK(d.hypothesis_ok);
  CHECK(d.fit.slope <= -3.0);
  CHECK(d.grad_fit.slope <= -3.0);
  CHECK(d.fit.decades >= 1.5);
  for (std::size_t k = 1; k < d.mass.size(); ++k) CHECK(d.mass[k] < d.mass[k - 1]);
}

TEST_CASE("forbidden-side amplitude falls off faster than any low power") {
  std::vector<double> t;
  for (int k = 0; k < 12; ++k) t.push_back(4.0 * std::pow(62.5, k / 11.0));
  const PointwiseDecay d = stationary_phase_pointwise(bump_profile(-1.0, 1.0), 0.0, t);
  CHECK(d.fit.slope <= -4.0);
  CHECK(d.fit.points >= 8);
}
