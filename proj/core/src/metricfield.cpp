#include "branchwave/metricfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "branchwave/errors.hpp"
#include "branchwave/quadrature.hpp"

namespace branchwave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
}  // namespace

SurfaceDerivatives SurfaceFunction::at(double x, double y, int s) const {
  if (!active_on(s) || !eval) return {};
  return eval(x, y, s);
}

SurfaceFunction zero_surface() {
  SurfaceFunction f;
  f.name = "zero";
  f.eval = [](double, double, int) { return SurfaceDerivatives{}; };
  f.beta_bar = 0.0;
  f.gamma_bar = 0.0;
  f.gradient_tail = [](double) { return 0.0; };
  return f;
}

SurfaceFunction linear_surface(double ax, double ay) {
  SurfaceFunction f;
  f.name = "linear";
  f.eval = [ax, ay](double x, double y, int) {
    SurfaceDerivatives d;
    d.f = ax * x + ay * y;
    d.fx = ax;
    d.fy = ay;
    return d;
  };
  f.beta_bar = std::max(std::abs(ax), std::abs(ay));
  f.gamma_bar = 0.0;
  if (ax == 0.0 && ay == 0.0) f.gradient_tail = [](double) { return 0.0; };
  return f;
}

SurfaceFunction paraboloid_surface(double c) {
  SurfaceFunction f;
  f.name = "paraboloid";
  f.eval = [c](double x, double y, int) {
    SurfaceDerivatives d;
    d.f = 0.5 * c * (x * x + y * y);
    d.fx = c * x;
    d.fy = c * y;
    d.fxx = c;
    d.fyy = c;
    return d;
  };
  f.gamma_bar = std::abs(c);
  if (c == 0.0) {
    f.beta_bar = 0.0;
    f.gradient_tail = [](double) { return 0.0; };
  }
  return f;
}

SurfaceFunction gaussian_bump_surface(double amplitude, double sigma, Vec2 center, int sheet) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidConfig, "gaussian_bump needs sigma > 0");
  SurfaceFunction f;
  f.name = "gaussian_bump";
  f.sheet = sheet;
  const double A = amplitude, s2 = sigma * sigma;
  f.eval = [A, s2, center](double x, double y, int) {
    const double dx = x - center.x, dy = y - center.y;
    const double e = A * std::exp(-(dx * dx + dy * dy) / s2);
    SurfaceDerivatives d;
    d.f = e;
    d.fx = -2.0 * dx / s2 * e;
    d.fy = -2.0 * dy / s2 * e;
    d.fxx = (4.0 * dx * dx / (s2 * s2) - 2.0 / s2) * e;
    d.fyy = (4.0 * dy * dy / (s2 * s2) - 2.0 / s2) * e;
    d.fxy = 4.0 * dx * dy / (s2 * s2) * e;
    return d;
  };
  f.beta_bar = std::abs(A) * std::numbers::sqrt2 / sigma * std::exp(-0.5);
  f.gamma_bar = 2.0 * std::abs(A) / s2;
  const double offset = std::hypot(center.x, center.y);
  // Outside B_R(0) lies outside B_{R - |center|}(center); there
  // int |grad f|^2 = pi A^2 (1 + u0) e^{-u0}, u0 = 2 (R - |center|)^2 / sigma^2.
  f.gradient_tail = [A, s2, offset](double R) {
    const double rr = std::max(0.0, R - offset);
    const double u0 = 2.0 * rr * rr / s2;
    return kPi * A * A * (1.0 + u0) * std::exp(-u0);
  };
  return f;
}

SurfaceFunction scaled_surface(const SurfaceFunction& base, double factor) {
  SurfaceFunction f = base;
  f.name = "scaled(" + base.name + ")";
  const auto inner = base.eval;
  f.eval = [inner, factor](double x, double y, int s) {
    SurfaceDerivatives d = inner(x, y, s);
    d.f *= factor;
    d.fx *= factor;
    d.fy *= factor;
    d.fxx *= factor;
    d.fxy *= factor;
    d.fyy *= factor;
    return d;
  };
  if (base.beta_bar) f.beta_bar = *base.beta_bar * std::abs(factor);
  if (base.gamma_bar) f.gamma_bar = *base.gamma_bar * std::abs(factor);
  if (base.envelope) f.envelope->C = base.envelope->C * factor * factor;
  if (base.gradient_tail) {
    const auto tail = base.gradient_tail;
    f.gradient_tail = [tail, factor](double R) { return factor * factor * tail(R); };
  }
  return f;
}

MetricSample metric_at(const SurfaceFunction& f, const SheetPoint& p) {
  const SurfaceDerivatives d = f.at(p);
  return {1.0 + d.fx * d.fx, d.fx * d.fy, 1.0 + d.fy * d.fy};
}

MetricSampler metric_sampler(const SurfaceFunction& f) {
  return [f](double x, double y, int sheet) {
    const SurfaceDerivatives d = f.at(x, y, sheet);
    return MetricTensor{1.0 + d.fx * d.fx, d.fx * d.fy, 1.0 + d.fy * d.fy};
  };
}

double gauss_curvature(const SurfaceFunction& f, const SheetPoint& p) {
  const SurfaceDerivatives d = f.at(p);
  const double w = 1.0 + d.grad_sq();
  return (d.fxx * d.fyy - d.fxy * d.fxy) / (w * w);
}

double dtilde_from_grad_sq(double z) { return z / std::sqrt(1.0 + z); }

double dtilde(const SurfaceFunction& f, const SheetPoint& p) {
  return dtilde_from_grad_sq(f.at(p).grad_sq());
}

double d0(const SheetPoint& p, const CoveringSpec& spec) {
  const auto [dm, dp] = distance_to_branch_points(p, spec);
  return std::min({1.0, dm, dp});
}

double r0_default(const SheetPoint& p, double rho, const CoveringSpec& spec) {
  return rho * d0(p, spec);
}

// ---------------------------------------------------------------------------
// Lattice scans

LatticeMax lattice_max(const std::function<double(double, double, int)>& g, const MetricDomain& dom) {
  auto pass = [&](double pitch) {
    const int n = static_cast<int>(std::floor(dom.radius / pitch + 1e-9));
    double best = 0.0;
    for (int s = 0; s < dom.num_sheets; ++s) {
      for (int j = -n; j <= n; ++j) {
        for (int i = -n; i <= n; ++i) best = std::max(best, g(i * pitch, j * pitch, s));
      }
    }
    return best;
  };
  LatticeMax out;
  double pitch = dom.pitch;
  double prev = pass(pitch);
  for (int round = 0; round < 4; ++round) {
    pitch *= 0.5;
    const double next = pass(pitch);
    const bool stable = std::abs(next - prev) <= 0.01 * std::max(std::abs(next), 1e-300);
    prev = std::max(prev, next);
    if (stable) {
      out.stable = true;
      break;
    }
  }
  out.value = prev;
  out.pitch = pitch;
  return out;
}

namespace {

// Max over lattice points p0 + pitch * (i, j) passing `keep`, refined until stable to 1%.
template <class Keep, class G>
double local_max(Vec2 p0, double reach, Keep keep, G g) {
  auto pass = [&](double pitch) {
    const int n = static_cast<int>(std::ceil(reach / pitch));
    double best = 0.0;
    for (int j = -n; j <= n; ++j) {
      for (int i = -n; i <= n; ++i) {
        const Vec2 p{p0.x + i * pitch, p0.y + j * pitch};
        if (keep(p)) best = std::max(best, g(p));
      }
    }
    return best;
  };
  double pitch = 0.05;
  double prev = pass(pitch);
  for (int round = 0; round < 3; ++round) {
    pitch *= 0.5;
    const double next = pass(pitch);
    const bool stable = std::abs(next - prev) <= 0.01 * std::max(next, 1e-300);
    prev = std::max(prev, next);
    if (stable) break;
  }
  return prev;
}

double first_derivative_bound(const SurfaceDerivatives& d) {
  return std::max(std::abs(d.fx), std::abs(d.fy));
}

double second_derivative_bound(const SurfaceDerivatives& d) {
  return std::max({std::abs(d.fxx), std::abs(d.fxy), std::abs(d.fyy)});
}

double reflection_bound(double beta, double gamma, double c) {
  const double denom = std::pow(1.0 + 2.0 * c * c * beta * beta, 2) * (gamma + c * beta);
  return denom > 0.0 ? 1.0 / denom : kInf;
}

}  // namespace

DInfResult dtilde_inf(const SurfaceFunction& f, const MetricDomain& dom) {
  DInfResult r;
  r.value = lattice_max([&](double x, double y, int s) { return dtilde_from_grad_sq(f.at(x, y, s).grad_sq()); },
                        dom)
                .value;
  if (f.beta_bar) r.declared_bound = dtilde_from_grad_sq(2.0 * *f.beta_bar * *f.beta_bar);
  return r;
}

// ---------------------------------------------------------------------------
// Weighted integrals

namespace {

constexpr double kExcision = 1e-6;
constexpr double kRegularGradSq = 1e-20;

// Sum over active sheets of the polar integral of g over the annulus
// {r_lo <= |p - c| <= r_hi}, with r = exp(u) when `log_radial`.
double polar_integral(const SurfaceFunction& f, int num_sheets, Vec2 c, double r_lo, double r_hi,
                      bool log_radial, const std::function<double(double z, double r)>& g) {
  const double a = log_radial ? std::log(r_lo) : r_lo;
  const double b = log_radial ? std::log(r_hi) : r_hi;
  auto eval = [&](int panels, int angles) {
    const CompositeRule rule = composite_gauss(a, b, panels, 16);
    double acc = 0.0;
    for (int s = 0; s < num_sheets; ++s) {
      if (!f.active_on(s)) continue;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double r = log_radial ? std::exp(rule.nodes[q]) : rule.nodes[q];
        const double jac = log_radial ? r * r : r;
        double ring = 0.0;
        for (int k = 0; k < angles; ++k) {
          const double th = 2.0 * kPi * (k + 0.5) / angles;
          const double z = f.at(c.x + r * std::cos(th), c.y + r * std::sin(th), s).grad_sq();
          ring += g(z, r);
        }
        acc += rule.weights[q] * jac * ring * (2.0 * kPi / angles);
      }
    }
    return acc;
  };
  int panels = std::max(4, static_cast<int>(std::ceil((b - a) / 0.5)));
  int angles = 128;
  double prev = eval(panels, angles);
  for (int round = 0; round < 6; ++round) {
    panels *= 2;
    angles *= 2;
    const double next = eval(panels, angles);
    if (std::abs(next - prev) <= 1e-9 * std::abs(next) + 1e-300) return next;
    prev = next;
  }
  throw Error(ErrorKind::QuadratureNotConverged, "polar quadrature of " + f.name);
}

// Integral over all sheets of h(z) w(d0) with w = (scale d0)^{-4}.
WeightedIntegral weighted_integral(const SurfaceFunction& f, double scale, const MetricDomain& dom,
                                   const CoveringSpec& spec, const std::function<double(double)>& h) {
  WeightedIntegral out;
  const double R = std::max(dom.radius, 4.0);
  out.radius = R;
  const int n = dom.num_sheets;
  const double far_weight = std::pow(scale, -4.0);
  auto far = [&](double z, double) { return h(z) * far_weight; };
  auto near = [&](double z, double r) { return h(z) * (std::pow(scale * r, -4.0) - far_weight); };

  auto interior = [&](double radius) {
    double acc = polar_integral(f, n, {0.0, 0.0}, 0.0, radius, false, far);
    for (Vec2 q : {spec.branch_minus, spec.branch_plus}) {
      acc += polar_integral(f, n, q, kExcision, 1.0, true, near);
      // Excised core counted with the far weight removed.
      double core = 0.0;
      for (int s = 0; s < n; ++s) {
        if (f.active_on(s)) core += h(f.at(q.x, q.y, s).grad_sq());
      }
      acc -= far_weight * kPi * kExcision * kExcision * core;
    }
    return acc;
  };

  for (Vec2 q : {spec.branch_minus, spec.branch_plus}) {
    for (int s = 0; s < n; ++s) {
      if (f.active_on(s) && f.at(q.x, q.y, s).grad_sq() > kRegularGradSq) out.branch_regular = false;
    }
  }

  int active = 0;
  for (int s = 0; s < n; ++s) active += f.active_on(s) ? 1 : 0;

  out.interior = interior(R);
  if (f.gradient_tail) {
    out.tail = far_weight * active * f.gradient_tail(R);
    out.tail_from_closed_form = true;
  } else if (f.envelope && R >= f.envelope->R0 && f.envelope->q > 2.0) {
    const DecayEnvelope& e = *f.envelope;
    out.tail = far_weight * active * 2.0 * kPi * e.C * std::pow(R, 2.0 - e.q) / (e.q - 2.0);
    out.tail_from_closed_form = true;
  } else {
    const double wider = interior(2.0 * R);
    if (std::abs(wider - out.interior) > 1e-9 * std::max(std::abs(wider), 1e-300)) {
      throw Error(ErrorKind::TailNotBounded,
                  f.name + ": no decay envelope declared and the truncated integral grows from " +
                      std::to_string(out.interior) + " to " + std::to_string(wider));
    }
    out.tail = 0.0;
  }
  out.value = out.interior + out.tail;
  return out;
}

}  // namespace

WeightedIntegral dtilde_1(const SurfaceFunction& f, double rho, const MetricDomain& dom,
                          const CoveringSpec& spec) {
  if (!(rho > 0.0)) throw Error(ErrorKind::InvalidConfig, "rho must be positive");
  // The tail uses dtilde <= |grad f|^2; the interior integrates dtilde itself.
  return weighted_integral(f, rho, dom, spec, dtilde_from_grad_sq);
}

WeightedIntegral graph_condition_integral(const SurfaceFunction& f, const MetricDomain& dom,
                                          const CoveringSpec& spec) {
  return weighted_integral(f, 1.0, dom, spec, [](double z) { return z; });
}

// ---------------------------------------------------------------------------
// Injectivity radius

BoundValue inj_bound_comparison(double eta, double K, double inj0) {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "eta must lie in (0,1]");
  if (!(inj0 > 0.0)) throw Error(ErrorKind::InvalidConfig, "inj0 must be positive");
  if (K <= 0.0) return {0.5 * eta * inj0, true};
  return {0.5 * std::min(eta * eta * kPi / std::sqrt(K), eta * inj0), false};
}

double inj_bound_global(double beta, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::ZeroGamma, "global bound needs gamma > 0");
  if (beta < 0.0) throw Error(ErrorKind::InvalidConfig, "beta must be nonnegative");
  const double w = 1.0 + 2.0 * beta * beta;
  return kPi / (2.0 * std::numbers::sqrt2) / (w * w * gamma);
}

double cutoff_constant() {
  // phi(p) = T(|p|) with T(r) = 1 - B(2r - 3) on [1, 2] and B the normalized
  // primitive of exp(-1/(1 - t^2)). Hessian eigenvalues are T'' and T'/r.
  static const double value = [] {
    const double norm =
        integrate([](double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; },
                  -1.0, 1.0, 1e-14, 8)
            .value;
    auto t1 = [&](double r) {
      const double t = 2.0 * r - 3.0;
      return std::abs(t) < 1.0 ? 2.0 * std::exp(-1.0 / (1.0 - t * t)) / norm : 0.0;
    };
    auto t2 = [&](double r) {
      const double t = 2.0 * r - 3.0;
      if (std::abs(t) >= 1.0) return 0.0;
      const double w = 1.0 - t * t;
      return 4.0 * std::exp(-1.0 / w) * 2.0 * std::abs(t) / (w * w) / norm;
    };
    double best = 0.0;
    const int n = 200000;
    for (int k = 0; k <= n; ++k) {
      const double r = 1.0 + static_cast<double>(k) / n;
      best = std::max({best, t1(r), t2(r), t1(r) / r});
    }
    return best;
  }();
  return value;
}

LocalBound inj_bound_local(const SurfaceFunction& f, const SheetPoint& p0) {
  LocalBound out;
  out.c = cutoff_constant();
  const Vec2 c = p0.planar();
  auto in_disc = [c](Vec2 p) { return std::hypot(p.x - c.x, p.y - c.y) <= 2.0 + 1e-12; };
  out.beta = local_max(c, 2.0, in_disc, [&](Vec2 p) { return first_derivative_bound(f.at(p.x, p.y, p0.sheet)); });
  out.gamma = local_max(c, 2.0, in_disc, [&](Vec2 p) { return second_derivative_bound(f.at(p.x, p.y, p0.sheet)); });
  out.value = std::min(1.0, reflection_bound(out.beta, out.gamma, out.c));
  return out;
}

LocalBound inj_bound_punctured(const SurfaceFunction& f, const SheetPoint& p0) {
  const double r0 = std::hypot(p0.x, p0.y);
  if (r0 == 0.0) throw Error(ErrorKind::AtPuncture, "p0 is the puncture");
  LocalBound out;
  out.c = cutoff_constant() * kExtensionConstant;
  const double inner = 0.5 * r0, outer = 0.5 * r0 + 2.0;
  auto in_annulus = [&](Vec2 p) {
    const double r = std::hypot(p.x, p.y);
    return r >= inner - 1e-12 && r <= outer + 1e-12;
  };
  out.beta = local_max({0.0, 0.0}, outer, in_annulus,
                       [&](Vec2 p) { return first_derivative_bound(f.at(p.x, p.y, p0.sheet)); });
  out.gamma = local_max({0.0, 0.0}, outer, in_annulus,
                        [&](Vec2 p) { return second_derivative_bound(f.at(p.x, p.y, p0.sheet)); });
  out.value = std::min(0.5 * r0, reflection_bound(out.beta, out.gamma, out.c));
  return out;
}

double covering_constant(const SurfaceFunction& f) {
  double beta = 0.0, gamma = 0.0;
  const MetricDomain dom;
  if (f.beta_bar) {
    beta = *f.beta_bar;
  } else {
    beta = lattice_max([&](double x, double y, int s) { return first_derivative_bound(f.at(x, y, s)); }, dom).value;
  }
  if (f.gamma_bar) {
    gamma = *f.gamma_bar;
  } else {
    gamma = lattice_max([&](double x, double y, int s) { return second_derivative_bound(f.at(x, y, s)); }, dom).value;
  }
  // Rescaling by 1/2 separates the branch points; second derivatives scale with it.
  const double c = cutoff_constant() * kExtensionConstant;
  return 0.5 * std::min(1.0, reflection_bound(beta, 0.5 * gamma, c));
}

CoveringBound inj_bound_covering(const SurfaceFunction& f, const SheetPoint& p, const CoveringSpec& spec) {
  CoveringBound out;
  out.c_f = covering_constant(f);
  out.value = out.c_f * d0(p, spec);
  return out;
}

// ---------------------------------------------------------------------------

AdmissibilityReport membership(const SurfaceFunction& f, double rho, double gamma_dist, double eps,
                               const MetricDomain& dom, const CoveringSpec& spec) {
  if (!(rho > 0.0 && rho <= 0.5)) throw Error(ErrorKind::InvalidConfig, "rho must lie in (0, 1/2]");
  AdmissibilityReport rep;
  rep.rho = rho;
  rep.sup_grad_sq = lattice_max([&](double x, double y, int s) { return f.at(x, y, s).grad_sq(); }, dom).value;
  rep.eta = 1.0 / (1.0 + rep.sup_grad_sq);
  rep.d_inf = dtilde_inf(f, dom).value;
  rep.d_1 = dtilde_1(f, rho, dom, spec);
  rep.curvature_lattice =
      lattice_max([&](double x, double y, int s) { return std::abs(gauss_curvature(f, {x, y, s})); }, dom).value;
  if (f.gamma_bar) rep.curvature_declared = 2.0 * *f.gamma_bar * *f.gamma_bar;
  rep.curvature_bound = rep.curvature_declared.value_or(rep.curvature_lattice);
  rep.c_f = covering_constant(f);
  const double inv_sqrt_k = rep.curvature_bound > 0.0 ? 1.0 / std::sqrt(rep.curvature_bound) : kInf;
  rep.rho_max = std::min({0.5, inv_sqrt_k, rep.c_f});
  rep.r0_description = "r0(p) = rho * min{1, dist(p,q-), dist(p,q+)}, rho = " + std::to_string(rho);

  if (rho > inv_sqrt_k) rep.failing.push_back("curvature: rho > 1/sqrt(K)");
  if (rho > rep.c_f) rep.failing.push_back("injectivity radius: rho > c_f");
  rep.member_r0 = rep.failing.empty();
  if (rep.d_inf > gamma_dist) rep.failing.push_back("d_inf > gamma");
  if (!rep.d_1.branch_regular) rep.failing.push_back("d_1 diverges at a branch point");
  else if (rep.d_1.value > eps) rep.failing.push_back("d_1 > eps");
  rep.member = rep.failing.empty();
  return rep;
}

}  // namespace branchwave
