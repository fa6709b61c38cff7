#include <doctest.h>

#include <cmath>
#include <numbers>

#include "branchwave/free_propagator.hpp"
#include "branchwave/packets.hpp"

using namespace branchwave;

namespace {

// Psi(x, t) by a plain trapezoid sum over the support; the integrand
// vanishes smoothly at both ends, so the sum converges spectrally.
cplx trapezoid_psi(const BandProfile& p, double k0, double x0, double x, double t, int n = 40000) {
  const double a = p.lo(), b = p.hi(), dxi = (b - a) / n;
  cplx acc = 0.0;
  for (int m = 1; m < n; ++m) {
    const double xi = k0 + a + m * dxi;
    acc += p(xi - k0) * std::exp(cplx(0.0, (x - x0) * xi - t * xi * xi));
  }
  return acc * dxi / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("gaussian profile disperses as |1 + 2 i t sigma^2|^-1") {
  const BandProfile g = truncated_gaussian_profile(1.0, 12.0);
  const double p0 = std::norm(position_values(g, 0.0, 0.0, {0.0}, 0.0)[0]);
  const double p1 = std::norm(position_values(g, 0.0, 0.0, {0.0}, 1.0)[0]);
  CHECK(p1 / p0 == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-6));
}

TEST_CASE("profiles are normalized in momentum space") {
  CHECK(bump_profile(-3.0, 3.0).norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(bump_profile(32.0, 33.0).norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(truncated_gaussian_profile(0.7, 6.0).norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("adaptive oscillatory quadrature matches a fine trapezoid sum") {
  const BandProfile p = bump_profile(-2.0, 2.0);
  const std::vector<double> xs{-3.0, 0.0, 0.7, 5.0, 20.0};
  for (double t : {0.0, 0.5, 3.0}) {
    const cvec v = position_values(p, 1.5, 0.25, xs, t);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      CHECK(std::abs(v[k] - trapezoid_psi(p, 1.5, 0.25, xs[k], t)) <= 1e-9);
    }
  }
}

TEST_CASE("derivative values are d/dx of Psi") {
  const BandProfile p = bump_profile(-1.0, 1.0);
  const double x = 0.8, t = 0.6, d = 1e-4;
  cvec v, dv;
  position_values_and_derivative(p, 0.0, 0.0, {x - d, x, x + d}, t, v, dv);
  const cplx fd = (v[2] - v[0]) / (2.0 * d);
  CHECK(std::abs(dv[1] - fd) <= 1e-7);
}

TEST_CASE("localization of psi1 improves with the band width") {
  const LocalizationCheck narrow = check_localization(1.0, 0.04);
  const LocalizationCheck wide = check_localization(16.0, 0.04);
  CHECK_FALSE(narrow.satisfied);
  CHECK(wide.mass > narrow.mass);
  CHECK(wide.mass <= 1.0 + 1e-12);
}

TEST_CASE("FFT free propagation agrees with the quadrature packet") {
  PacketSpec spec;
  spec.a = 4.0;
  spec.s = 8.0;
  PlanarGrid g;
  g.h = 1.0 / 8.0;
  g.nx = 160;
  g.ny = 640;
  g.x0 = -0.5 * (g.nx - 1) * g.h;
  g.y0 = -0.5 * (g.ny - 1) * g.h;
  const double carrier = spec.s + 0.5, t = 0.15;
  const PlanarField v0 = packet_values(spec, g, 0.0, carrier);
  FreePropagator prop(g, carrier);
  const PlanarField vt = prop.propagate(v0, t);
  const PlanarField exact = packet_values(spec, g, t, carrier);
  double err = 0.0;
  for (std::size_t k = 0; k < vt.values.size(); ++k) err += std::norm(vt.values[k] - exact.values[k]);
  CHECK(std::sqrt(err) * g.h <= 1e-2);
  CHECK(prop.last_pad_mass() <= 1e-2);
}

TEST_CASE("the source term vanishes outside the cutoff layer") {
  PacketSpec spec;
  spec.a = 2.0;
  spec.s = 4.0;
  PlanarGrid g;
  g.h = 1.0 / 16.0;
  g.nx = 160;
  g.ny = 160;
  g.x0 = -5.0;
  g.y0 = -5.0;
  const SourceTerm f(spec, g, spec.s + 0.5);
  CHECK(f.layer_nodes() > 0);
  CHECK(f.layer_nodes() < g.size() / 2);
  const PlanarField ft = f.field(0.1);
  CHECK(std::sqrt(ft.norm_sq()) == doctest::Approx(f.norm(0.1)).epsilon(1e-12));
}
