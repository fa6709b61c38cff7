#include "branchwave/cutoff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "branchwave/quadrature.hpp"

namespace branchwave {

namespace {

constexpr double kR = Mollifier::kRadius;
// Z = int_0^1 exp(-1/v) dv = e^{-1} - E1(1)
const double kZ = std::exp(-1.0) + std::expint(-1.0);
const double kScale = 1.0 / (std::numbers::pi * kZ);

double e1(double x) { return -std::expint(-x); }

// F(v) = v e^{-1/v} - E1(1/v), an antiderivative of exp(-1/v).
double antiderivative(double v) {
  if (v <= 0.0) return 0.0;
  return v * std::exp(-1.0 / v) - e1(1.0 / v);
}

struct Ray {
  Vec2 apex, dir, normal;
};

const std::array<Ray, 4>& rays() {
  static const double s = std::numbers::sqrt2 / 2.0;
  static const std::array<Ray, 4> r{{
      {{0.5, 0.0}, {s, s}, {s, -s}},
      {{0.5, 0.0}, {s, -s}, {s, s}},
      {{-0.5, 0.0}, {-s, s}, {-s, -s}},
      {{-0.5, 0.0}, {-s, -s}, {-s, s}},
  }};
  return r;
}

constexpr int kRayOrder = 48;

}  // namespace

double Mollifier::value(double r) {
  const double u = r / kR;
  if (u >= 1.0) return 0.0;
  return kScale * std::exp(-1.0 / (1.0 - u * u)) / (kR * kR);
}

double Mollifier::derivative(double r) {
  const double u = r / kR;
  if (u >= 1.0) return 0.0;
  const double w = 1.0 - u * u;
  return kScale * std::exp(-1.0 / w) * (-2.0 * u / (w * w)) / (kR * kR * kR);
}

double Mollifier::mass(double r) {
  const double u = std::min(r / kR, 1.0);
  const double upper = u * u;
  // (c/2) int_0^U exp(-1/(1-V)) dV; direct quadrature where the closed form cancels.
  if (upper <= 0.5) {
    const GaussRule& g = gauss_legendre(24);
    double acc = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double v = 0.5 * upper * (g.nodes[q] + 1.0);
      acc += g.weights[q] * std::exp(-1.0 / (1.0 - v));
    }
    return 0.5 * kScale * 0.5 * upper * acc;
  }
  return 0.5 * kScale * (antiderivative(1.0) - antiderivative(1.0 - upper));
}

bool ConeCutoff::in_cone(Vec2 p) const {
  return std::abs(p.x - shift_) < kHalfWidth + std::abs(p.y);
}

double ConeCutoff::boundary_distance(Vec2 p) const {
  const Vec2 q{p.x - shift_, p.y};
  double best = std::numeric_limits<double>::infinity();
  for (const Ray& ray : rays()) {
    const double wx = q.x - ray.apex.x, wy = q.y - ray.apex.y;
    const double along = std::max(0.0, wx * ray.dir.x + wy * ray.dir.y);
    best = std::min(best, std::hypot(wx - along * ray.dir.x, wy - along * ray.dir.y));
  }
  return best;
}

CutoffSample ConeCutoff::eval(Vec2 p) const {
  const Vec2 q{p.x - shift_, p.y};
  CutoffSample out;
  if (boundary_distance(p) >= kR) {
    out.value = in_cone(p) ? 1.0 : 0.0;
    return out;
  }

  const GaussRule& g = gauss_legendre(kRayOrder);
  std::array<double, 8> angles{};
  int n_angles = 0;
  double ray_part = 0.0;
  for (const Ray& ray : rays()) {
    const double wx = ray.apex.x - q.x, wy = ray.apex.y - q.y;
    const double b = wx * ray.dir.x + wy * ray.dir.y;
    const double c = wx * wx + wy * wy - kR * kR;
    const double disc = b * b - c;
    if (disc <= 0.0) continue;
    const double root = std::sqrt(disc);
    const double t_lo = -b - root, t_hi = -b + root;
    if (t_hi <= 0.0) continue;
    for (double t : {t_lo, t_hi}) {
      if (t >= 0.0) {
        angles[n_angles++] =
            std::atan2(wy + t * ray.dir.y, wx + t * ray.dir.x);
      }
    }
    const double t0 = std::max(t_lo, 0.0);
    const double mid = 0.5 * (t0 + t_hi), half = 0.5 * (t_hi - t0);
    // Signed offset of the boundary line from p along the outward normal.
    const double d = wx * ray.normal.x + wy * ray.normal.y;
    double acc_val = 0.0, acc_j = 0.0, acc_lap = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const double t = mid + half * g.nodes[k];
      const double rx = wx + t * ray.dir.x, ry = wy + t * ray.dir.y;
      const double r2 = rx * rx + ry * ry;
      const double r = std::sqrt(r2);
      const double w = g.weights[k] * half;
      if (r > 1e-12) {
        acc_val += w * Mollifier::mass(r) / r2;
        acc_lap += w * Mollifier::derivative(r) / r;
      } else {
        acc_val += w * 0.5 * Mollifier::value(0.0);
        acc_lap += w * 0.0;
      }
      acc_j += w * Mollifier::value(r);
    }
    ray_part += d * acc_val;
    out.dx -= ray.normal.x * acc_j;
    out.dy -= ray.normal.y * acc_j;
    out.lap += d * acc_lap;
  }

  // Fraction of the mollifier circle lying inside the cone.
  double fraction = 0.0;
  auto inside_local = [](double x, double y) { return std::abs(x) < kHalfWidth + std::abs(y); };
  if (n_angles == 0) {
    fraction = inside_local(q.x + kR, q.y) ? 1.0 : 0.0;
  } else {
    std::sort(angles.begin(), angles.begin() + n_angles);
    for (int k = 0; k < n_angles; ++k) {
      const double a0 = angles[k];
      const double a1 = (k + 1 < n_angles) ? angles[k + 1] : angles[0] + 2.0 * std::numbers::pi;
      const double m = 0.5 * (a0 + a1);
      if (inside_local(q.x + kR * std::cos(m), q.y + kR * std::sin(m))) {
        fraction += (a1 - a0) / (2.0 * std::numbers::pi);
      }
    }
  }
  out.value = std::clamp(fraction + ray_part, 0.0, 1.0);
  return out;
}

CutoffField build_cutoff(const PlanarGrid& grid, double shift) {
  const ConeCutoff cut(shift);
  CutoffField f;
  f.grid = grid;
  const std::size_t n = grid.size();
  f.chi.assign(n, 0.0);
  f.dx.assign(n, 0.0);
  f.dy.assign(n, 0.0);
  f.lap.assign(n, 0.0);
#pragma omp parallel for schedule(dynamic, 16) if (n > 4096)
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t id = static_cast<std::size_t>(j) * grid.nx + i;
      const CutoffSample s = cut.eval({grid.x(i), grid.y(j)});
      f.chi[id] = s.value;
      f.dx[id] = s.dx;
      f.dy[id] = s.dy;
      f.lap[id] = s.lap;
    }
  }
  return f;
}

}  // namespace branchwave
