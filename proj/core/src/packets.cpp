#include "branchwave/packets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "branchwave/errors.hpp"
#include "branchwave/quadrature.hpp"

namespace branchwave {

namespace {

constexpr int kOrder = 16;
constexpr double kRelTol = 1e-9;
constexpr std::size_t kResync = 256;

double bump_shape(double tau) {
  if (tau <= -1.0 || tau >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - tau * tau));
}

bool is_uniform(const std::vector<double>& xs, double& step) {
  if (xs.size() < 3) return false;
  step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  if (step == 0.0) return false;
  const double tol = 1e-12 * std::max(1.0, std::abs(step) * xs.size());
  for (std::size_t m = 1; m < xs.size(); ++m) {
    if (std::abs(xs[m] - (xs.front() + m * step)) > tol) return false;
  }
  return true;
}

// out[m] = sum_q amp[q] exp(i xs[m] nodes[q])
void sum_exponentials(const cvec& amp, const std::vector<double>& nodes,
                      const std::vector<double>& xs, cvec& out) {
  const std::size_t nq = nodes.size(), nx = xs.size();
  out.assign(nx, cplx(0.0, 0.0));
  double step = 0.0;
  if (is_uniform(xs, step)) {
    const double x0 = xs.front();
    cvec rot(nq);
    for (std::size_t q = 0; q < nq; ++q) rot[q] = std::polar(1.0, step * nodes[q]);
    const std::size_t blocks = (nx + kResync - 1) / kResync;
#pragma omp parallel for schedule(static) if (blocks > 1 && nq * nx > 65536)
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t m0 = b * kResync, m1 = std::min(nx, m0 + kResync);
      cvec phase(nq);
      for (std::size_t q = 0; q < nq; ++q) {
        phase[q] = amp[q] * std::polar(1.0, (x0 + m0 * step) * nodes[q]);
      }
      for (std::size_t m = m0; m < m1; ++m) {
        double re = 0.0, im = 0.0;
        for (std::size_t q = 0; q < nq; ++q) {
          re += phase[q].real();
          im += phase[q].imag();
          phase[q] *= rot[q];
        }
        out[m] = cplx(re, im);
      }
    }
    return;
  }
#pragma omp parallel for schedule(static) if (nq * nx > 65536)
  for (std::size_t m = 0; m < nx; ++m) {
    cplx acc(0.0, 0.0);
    for (std::size_t q = 0; q < nq; ++q) acc += amp[q] * std::polar(1.0, xs[m] * nodes[q]);
    out[m] = acc;
  }
}

int initial_panels(double lo, double hi, double x0, const std::vector<double>& xs, double t) {
  double reach = 0.0;
  for (double x : xs) reach = std::max(reach, std::abs(x - x0));
  const double width = hi - lo;
  const double phase = reach * width + std::abs(t) * std::abs(hi * hi - lo * lo) +
                       2.0 * std::abs(t) * width * width;
  const int by_phase = static_cast<int>(std::ceil(phase / 6.0));
  return std::max(8, by_phase);
}

double diff_norm(const cvec& a, const cvec& b) {
  double acc = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) acc += std::norm(a[m] - b[m]);
  return std::sqrt(acc);
}

struct Evaluation {
  cvec values, derivatives;
  double floor = 0.0;
};

Evaluation evaluate(const BandProfile& profile, double k0, double x0, const std::vector<double>& xs,
                    double t, int panels, bool values, bool derivatives) {
  const double lo = profile.lo() + k0, hi = profile.hi() + k0;
  const CompositeRule rule = composite_gauss(lo, hi, panels, kOrder);
  const std::size_t nq = rule.nodes.size();
  cvec amp(nq);
  double abs_sum = 0.0;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t q = 0; q < nq; ++q) {
    const double xi = rule.nodes[q];
    const double w = rule.weights[q] * profile(xi - k0);
    abs_sum += std::abs(w);
    amp[q] = norm * w * std::polar(1.0, -t * xi * xi - x0 * xi);
  }
  Evaluation ev;
  ev.floor = 1e-15 * abs_sum * std::sqrt(static_cast<double>(xs.size()));
  if (values) sum_exponentials(amp, rule.nodes, xs, ev.values);
  if (derivatives) {
    for (std::size_t q = 0; q < nq; ++q) amp[q] *= cplx(0.0, rule.nodes[q]);
    sum_exponentials(amp, rule.nodes, xs, ev.derivatives);
    const double scale = std::max(std::abs(lo), std::abs(hi));
    ev.floor *= std::max(1.0, scale);
  }
  return ev;
}

void evaluate_converged(const BandProfile& profile, double k0, double x0,
                        const std::vector<double>& xs, double t, bool want_values,
                        bool want_derivatives, cvec* values, cvec* derivatives) {
  int panels = initial_panels(profile.lo() + k0, profile.hi() + k0, x0, xs, t);
  Evaluation prev = evaluate(profile, k0, x0, xs, t, panels, want_values, want_derivatives);
  for (int round = 0; round < 12; ++round) {
    panels *= 2;
    Evaluation next = evaluate(profile, k0, x0, xs, t, panels, want_values, want_derivatives);
    bool ok = true;
    if (want_values) {
      ok = ok && diff_norm(prev.values, next.values) <=
                     kRelTol * std::sqrt(norm_sq(next.values)) + next.floor;
    }
    if (want_derivatives) {
      ok = ok && diff_norm(prev.derivatives, next.derivatives) <=
                     kRelTol * std::sqrt(norm_sq(next.derivatives)) + next.floor;
    }
    if (ok) {
      if (values) *values = std::move(next.values);
      if (derivatives) *derivatives = std::move(next.derivatives);
      return;
    }
    prev = std::move(next);
  }
  throw Error(ErrorKind::QuadratureNotConverged,
              "position_values did not converge at t = " + std::to_string(t));
}

}  // namespace

double BandProfile::shape_value(double xi) const {
  if (xi <= lo_ || xi >= hi_) return 0.0;
  if (shape_ == ProfileShape::Bump) {
    return bump_shape((2.0 * xi - lo_ - hi_) / (hi_ - lo_));
  }
  return std::exp(-xi * xi / (2.0 * sigma_ * sigma_));
}

double BandProfile::operator()(double xi) const { return c_ * shape_value(xi); }

double BandProfile::norm_sq() const {
  const CompositeRule r = composite_gauss(lo_, hi_, 64, 20);
  double acc = 0.0;
  for (std::size_t q = 0; q < r.nodes.size(); ++q) {
    const double v = (*this)(r.nodes[q]);
    acc += r.weights[q] * v * v;
  }
  return acc;
}

BandProfile bump_profile(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::EmptySupport, "bump profile needs lo < hi");
  }
  BandProfile p;
  p.lo_ = lo;
  p.hi_ = hi;
  p.shape_ = ProfileShape::Bump;
  p.c_ = 1.0;
  const QuadResult q = integrate(
      [&](double xi) {
        const double v = p.shape_value(xi);
        return v * v;
      },
      lo, hi, 1e-14, 8);
  p.c_ = 1.0 / std::sqrt(q.value);
  return p;
}

BandProfile truncated_gaussian_profile(double sigma, double half_width) {
  if (!(sigma > 0.0) || !(half_width > 0.0)) {
    throw Error(ErrorKind::EmptySupport, "truncated Gaussian needs sigma, half_width > 0");
  }
  BandProfile p;
  p.lo_ = -half_width;
  p.hi_ = half_width;
  p.sigma_ = sigma;
  p.shape_ = ProfileShape::TruncatedGaussian;
  const QuadResult q = integrate(
      [&](double xi) {
        const double v = p.shape_value(xi);
        return v * v;
      },
      -half_width, half_width, 1e-14, 8);
  p.c_ = 1.0 / std::sqrt(q.value);
  return p;
}

cvec position_values(const BandProfile& profile, double k0, double x0,
                     const std::vector<double>& xs, double t, bool derivative) {
  cvec out;
  if (xs.empty()) return out;
  evaluate_converged(profile, k0, x0, xs, t, !derivative, derivative, derivative ? nullptr : &out,
                     derivative ? &out : nullptr);
  return out;
}

void position_values_and_derivative(const BandProfile& profile, double k0, double x0,
                                    const std::vector<double>& xs, double t, cvec& values,
                                    cvec& derivatives) {
  values.clear();
  derivatives.clear();
  if (xs.empty()) return;
  evaluate_converged(profile, k0, x0, xs, t, true, true, &values, &derivatives);
}

void PacketSpec::validate() const {
  if (!(a > 0.0)) throw Error(ErrorKind::InvalidConfig, "packet.a must be positive");
  if (!(s >= 0.0)) throw Error(ErrorKind::InvalidConfig, "packet.s must be nonnegative");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::InvalidConfig, "packet.eps must lie in (0,1)");
  if (!std::isfinite(k)) throw Error(ErrorKind::InvalidConfig, "packet.k must be finite");
}

LocalizationCheck check_localization(double a, double eps_prime) {
  const BandProfile p = bump_profile(-a, a);
  const CompositeRule r = composite_gauss(-0.25, 0.25, 8, 16);
  const cvec v = position_values(p, 0.0, 0.0, r.nodes, 0.0);
  double mass = 0.0;
  for (std::size_t q = 0; q < v.size(); ++q) mass += r.weights[q] * std::norm(v[q]);
  LocalizationCheck out;
  out.mass = std::sqrt(mass);
  out.satisfied = out.mass > 1.0 - eps_prime;
  return out;
}

ProductSample packet_factors(const PacketSpec& spec, const std::vector<double>& xs,
                             const std::vector<double>& ys, double t, bool with_derivatives,
                             double carrier) {
  ProductSample out;
  const BandProfile px = spec.profile_x(), py = spec.profile_y();
  // Removing the carrier shifts the momentum by -carrier and the position by 2 carrier t.
  const double k0 = spec.s - carrier, y0 = 2.0 * carrier * t;
  if (with_derivatives) {
    position_values_and_derivative(px, 0.0, spec.k, xs, t, out.psi1, out.dpsi1);
    position_values_and_derivative(py, k0, y0, ys, t, out.psi2, out.dpsi2);
  } else {
    out.psi1 = position_values(px, 0.0, spec.k, xs, t);
    out.psi2 = position_values(py, k0, y0, ys, t);
  }
  return out;
}

PlanarField packet_values(const PacketSpec& spec, const PlanarGrid& grid, double t, double carrier) {
  const ProductSample f = packet_factors(spec, grid.xs(), grid.ys(), t, false, carrier);
  PlanarField out{grid, cvec(grid.size())};
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      out.values[static_cast<std::size_t>(j) * grid.nx + i] = f.psi1[i] * f.psi2[j];
    }
  }
  return out;
}

PlanarField truncated_packet(const PacketSpec& spec, const PlanarGrid& grid, double t,
                             double carrier) {
  PlanarField u = packet_values(spec, grid, t, carrier);
  const ConeCutoff cut(spec.k);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t id = static_cast<std::size_t>(j) * grid.nx + i;
      u.values[id] *= cut.value({grid.x(i), grid.y(j)});
    }
  }
  return u;
}

SourceTerm::SourceTerm(const PacketSpec& spec, const PlanarGrid& grid, double carrier)
    : spec_(spec), grid_(grid), carrier_(carrier) {
  const ConeCutoff cut(spec.k);
  std::vector<std::vector<LayerNode>> rows(grid.ny);
#pragma omp parallel for schedule(dynamic, 4)
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    // The layer in row j lies within 1/2 + |y| + 1/2 of the shifted axis.
    const double reach = 1.0 + std::abs(y);
    const int i_lo = std::max(0, static_cast<int>(std::floor((spec.k - reach - grid.x0) / grid.h)));
    const int i_hi =
        std::min(grid.nx - 1, static_cast<int>(std::ceil((spec.k + reach - grid.x0) / grid.h)));
    for (int i = i_lo; i <= i_hi; ++i) {
      const Vec2 p{grid.x(i), y};
      if (!cut.in_layer(p)) continue;
      const CutoffSample c = cut.eval(p);
      if (c.dx == 0.0 && c.dy == 0.0 && c.lap == 0.0) continue;
      rows[j].push_back({i, j, c.dx, c.dy, c.lap});
    }
  }
  for (auto& r : rows) layer_.insert(layer_.end(), r.begin(), r.end());
}

namespace {

// Restrict evaluation to rows and columns where the packet factors matter.
struct ActiveWindow {
  int j_lo = 0, j_hi = -1;
};

ActiveWindow active_rows(const cvec& psi2, const cvec& dpsi2) {
  double peak = 0.0;
  for (std::size_t j = 0; j < psi2.size(); ++j) {
    peak = std::max(peak, std::abs(psi2[j]) + std::abs(dpsi2[j]));
  }
  ActiveWindow w;
  const double cut = 1e-16 * peak;
  for (std::size_t j = 0; j < psi2.size(); ++j) {
    if (std::abs(psi2[j]) + std::abs(dpsi2[j]) > cut) {
      if (w.j_hi < w.j_lo) w.j_lo = static_cast<int>(j);
      w.j_hi = static_cast<int>(j);
    }
  }
  return w;
}

}  // namespace

void SourceTerm::for_each_value(double t,
                                const std::function<void(const LayerNode&, cplx)>& fn) const {
  if (layer_.empty()) return;
  cvec psi2, dpsi2;
  position_values_and_derivative(spec_.profile_y(), spec_.s - carrier_, 2.0 * carrier_ * t,
                                 grid_.ys(), t, psi2, dpsi2);
  const ActiveWindow w = active_rows(psi2, dpsi2);
  if (w.j_hi < w.j_lo) return;
  int i_lo = grid_.nx, i_hi = -1;
  for (const LayerNode& n : layer_) {
    if (n.j < w.j_lo || n.j > w.j_hi) continue;
    i_lo = std::min(i_lo, n.i);
    i_hi = std::max(i_hi, n.i);
  }
  if (i_hi < i_lo) return;
  std::vector<double> xs;
  for (int i = i_lo; i <= i_hi; ++i) xs.push_back(grid_.x(i));
  cvec psi1, dpsi1;
  position_values_and_derivative(spec_.profile_x(), 0.0, spec_.k, xs, t, psi1, dpsi1);
  const cplx I(0.0, 1.0);
  for (const LayerNode& n : layer_) {
    if (n.j < w.j_lo || n.j > w.j_hi) continue;
    const std::size_t ii = static_cast<std::size_t>(n.i - i_lo);
    const cplx u = psi1[ii] * psi2[n.j];
    const cplx ux = dpsi1[ii] * psi2[n.j];
    const cplx uy = psi1[ii] * dpsi2[n.j] + I * carrier_ * u;
    fn(n, -2.0 * I * (n.dx * ux + n.dy * uy) - I * u * n.lap);
  }
}

PlanarField SourceTerm::field(double t) const {
  PlanarField out{grid_, cvec(grid_.size(), cplx(0.0, 0.0))};
  for_each_value(t, [&](const LayerNode& n, cplx v) {
    out.values[static_cast<std::size_t>(n.j) * grid_.nx + n.i] = v;
  });
  return out;
}

double SourceTerm::norm(double t) const {
  double acc = 0.0;
  for_each_value(t, [&](const LayerNode&, cplx v) { acc += std::norm(v); });
  return grid_.h * std::sqrt(acc);
}


namespace {

void check_match(const PlanarGrid& p, const BranchedGrid& g) {
  const PlanarGrid q = planar_grid_of(g);
  const double tol = 1e-9 * g.h();
  if (p.nx != q.nx || p.ny != q.ny || std::abs(p.h - q.h) > tol || std::abs(p.x0 - q.x0) > tol ||
      std::abs(p.y0 - q.y0) > tol) {
    throw Error(ErrorKind::GridMismatch, "planar field does not match the branched grid nodes");
  }
  if (g.is_disc()) throw Error(ErrorKind::GridMismatch, "cannot lift onto a disc grid");
}

}  // namespace

WaveField lift_to_cover(const PlanarField& v, const BranchedGrid& grid, int low_sheet) {
  check_match(v.grid, grid);
  const int high_sheet = grid.covering().monodromy(low_sheet, 1);
  WaveField w(grid);
  for (int j = 0; j < v.grid.ny; ++j) {
    const int jj = grid.j_lo() + j;
    const int sheet = grid.y_of(jj) < 0.0 ? low_sheet : high_sheet;
    for (int i = 0; i < v.grid.nx; ++i) {
      const std::int64_t id = grid.index(sheet, grid.i_lo() + i, jj);
      w.values[static_cast<std::size_t>(id)] = v.values[static_cast<std::size_t>(j) * v.grid.nx + i];
    }
  }
  return w;
}

WaveField place_on_sheet(const PlanarField& v, const BranchedGrid& grid, int sheet) {
  check_match(v.grid, grid);
  WaveField w(grid);
  for (int j = 0; j < v.grid.ny; ++j) {
    for (int i = 0; i < v.grid.nx; ++i) {
      const std::int64_t id = grid.index(sheet, grid.i_lo() + i, grid.j_lo() + j);
      w.values[static_cast<std::size_t>(id)] = v.values[static_cast<std::size_t>(j) * v.grid.nx + i];
    }
  }
  return w;
}

}  // namespace branchwave
