#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "branchwave/errors.hpp"
#include "branchwave/metricfield.hpp"

using namespace branchwave;

namespace {

// Gauss curvature of a graph from finite differences of f alone.
double fd_curvature(const SurfaceFunction& f, double x, double y, double h) {
  auto F = [&](double u, double v) { return f.at(u, v, 0).f; };
  const double fx = (F(x + h, y) - F(x - h, y)) / (2 * h);
  const double fy = (F(x, y + h) - F(x, y - h)) / (2 * h);
  const double fxx = (F(x + h, y) - 2 * F(x, y) + F(x - h, y)) / (h * h);
  const double fyy = (F(x, y + h) - 2 * F(x, y) + F(x, y - h)) / (h * h);
  const double fxy = (F(x + h, y + h) - F(x + h, y - h) - F(x - h, y + h) + F(x - h, y - h)) / (4 * h * h);
  const double w = 1.0 + fx * fx + fy * fy;
  return (fxx * fyy - fxy * fxy) / (w * w);
}

}  // namespace

TEST_CASE("curvature of simple graphs") {
  CHECK(std::abs(gauss_curvature(linear_surface(0.3, -1.2), {0.4, 2.0, 0})) <= 1e-12);
  const SurfaceFunction p = paraboloid_surface(1.0);
  CHECK(std::abs(gauss_curvature(p, {0.0, 0.0, 0}) - 1.0) <= 1e-12);
  CHECK(std::abs(gauss_curvature(p, {1.0, 0.0, 0}) - 0.25) <= 1e-12);
  CHECK(std::abs(gauss_curvature(p, {0.6, 0.8, 1}) - 0.25) <= 1e-12);
}

TEST_CASE("curvature agrees with a second-order finite-difference oracle") {
  const SurfaceFunction f = gaussian_bump_surface(0.8, 1.3, {0.5, 1.0});
  for (Vec2 q : {Vec2{0.5, 1.0}, Vec2{1.2, 0.3}, Vec2{-0.4, 2.2}}) {
    const double K = gauss_curvature(f, {q.x, q.y, 0});
    const double e1 = std::abs(fd_curvature(f, q.x, q.y, 1e-2) - K);
    const double e2 = std::abs(fd_curvature(f, q.x, q.y, 5e-3) - K);
    CHECK(e1 <= 1e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
  }
}

TEST_CASE("metric eigenvalue discrepancy is bounded by |grad f|^2") {
  const SurfaceFunction f = gaussian_bump_surface(2.0, 0.8, {0.0, 0.0});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const SheetPoint p{u(rng), u(rng), 0};
    const double z = f.at(p).grad_sq();
    CHECK(dtilde(f, p) <= z + 1e-15);
    const MetricSample g = metric_at(f, p);
    CHECK(g.alpha2() == doctest::Approx(1.0 + z).epsilon(1e-13));
  }
}

TEST_CASE("global injectivity bound and its monotonicity") {
  CHECK(inj_bound_global(0.0, 1.0) == doctest::Approx(std::numbers::pi / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
  CHECK(std::abs(inj_bound_global(0.0, 1.0) - std::numbers::pi / (2.0 * std::sqrt(2.0))) <= 1e-12);
  CHECK(inj_bound_global(0.0, 1.0) > inj_bound_global(0.5, 1.0));
  CHECK(inj_bound_global(0.5, 1.0) > inj_bound_global(1.0, 1.0));
  CHECK(inj_bound_global(0.5, 0.5) > inj_bound_global(0.5, 1.0));
  CHECK(inj_bound_global(0.5, 1.0) > inj_bound_global(0.5, 2.0));
  CHECK_THROWS_AS(inj_bound_global(0.0, 0.0), Error);
}

TEST_CASE("comparison bound grows with eta and inj0 and shrinks with K") {
  CHECK(inj_bound_comparison(0.5, 1.0, 1.0).value < inj_bound_comparison(0.7, 1.0, 1.0).value);
  CHECK(inj_bound_comparison(0.7, 1.0, 1.0).value < inj_bound_comparison(0.9, 1.0, 1.0).value);
  CHECK(inj_bound_comparison(0.9, 50.0, 1.0).value > inj_bound_comparison(0.9, 100.0, 1.0).value);
  CHECK(inj_bound_comparison(0.9, 100.0, 1.0).value > inj_bound_comparison(0.9, 200.0, 1.0).value);
  CHECK(inj_bound_comparison(0.9, 1.0, 0.5).value <= inj_bound_comparison(0.9, 1.0, 1.0).value);
  CHECK(inj_bound_comparison(0.9, -1.0, 1.0).flagged);
}

TEST_CASE("local bounds decrease as the bump steepens") {
  double prev = 2.0;
  for (double A : {0.1, 0.5, 2.0}) {
    const LocalBound b = inj_bound_local(gaussian_bump_surface(A, 1.0, {0.0, 0.0}), {0.5, 0.5, 0});
    CHECK(b.value <= 1.0);
    CHECK(b.value < prev);
    prev = b.value;
  }
  CHECK_THROWS_AS(inj_bound_punctured(zero_surface(), {0.0, 0.0, 0}), Error);
  CHECK(inj_bound_local(zero_surface(), {3.0, 1.0, 0}).value == 1.0);
}

TEST_CASE("cutoff derivative constant") {
  CHECK(cutoff_constant() == doctest::Approx(7.1932).epsilon(1e-4));
}

TEST_CASE("weighted quasi-distance scales like the squared amplitude") {
  const SurfaceFunction base = gaussian_bump_surface(1.0, 1.5, {0.0, 6.0});
  MetricDomain dom;
  dom.radius = 12.0;
  std::vector<double> d1;
  for (double n : {2.0, 4.0, 8.0}) d1.push_back(dtilde_1(scaled_surface(base, 1.0 / n), 0.25, dom).value);
  CHECK(d1[0] / d1[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(d1[1] / d1[2] == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("growing gradients without a declared envelope are rejected") {
  MetricDomain dom;
  dom.radius = 6.0;
  try {
    dtilde_1(paraboloid_surface(0.5), 0.25, dom);
    FAIL("expected TailNotBounded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TailNotBounded);
  }
}
