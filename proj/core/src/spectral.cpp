#include "branchwave/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fftw3.h>

#include <limits>
#include <mutex>
#include <numbers>
#include <random>

#include "branchwave/cutoff.hpp"
#include "branchwave/errors.hpp"
#include "branchwave/evolution.hpp"
#include "branchwave/free_propagator.hpp"
#include "branchwave/quadrature.hpp"

namespace branchwave {

namespace {
// Above this argument the series loses too many digits to cancellation.
constexpr double kSeriesLimit = 20.0;
}  // namespace

double bessel_j(double nu, double x) {
  if (nu < 0.0) throw Error(ErrorKind::InvalidConfig, "Bessel order must be nonnegative");
  if (x < 0.0) throw Error(ErrorKind::InvalidConfig, "Bessel argument must be nonnegative");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x > kSeriesLimit) return std::cyl_bessel_j(nu, x);
  using ld = long double;
  const ld half = static_cast<ld>(x) / 2.0L;
  const ld q = -half * half;
  ld term = std::exp(static_cast<ld>(nu) * std::log(half) - std::lgamma(static_cast<ld>(nu) + 1.0L));
  ld sum = term;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<ld>(m) * (static_cast<ld>(m) + static_cast<ld>(nu)));
    sum += term;
    if (std::abs(term) < 1e-24L * std::max(std::abs(sum), 1e-300L) && m > half) break;
  }
  return static_cast<double>(sum);
}

double bessel_zero_oracle(double nu, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidConfig, "zero index must be positive");
  if (nu < 0.0) throw Error(ErrorKind::InvalidConfig, "Bessel order must be nonnegative");
  const double step = 0.05;
  // Zeros of J_nu lie beyond nu; start just above the origin.
  double a = 1e-3, fa = bessel_j(nu, a);
  int found = 0;
  const double x_max = nu + 2.0 * M_PI * (k + 2) + 10.0;
  while (a < x_max) {
    const double b = a + step;
    const double fb = bessel_j(nu, b);
    if (fa == 0.0 && a > 1e-3) {
      if (++found == k) return a;
    } else if (fa * fb < 0.0) {
      if (++found == k) {
        double lo = a, hi = b, flo = fa;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = bessel_j(nu, mid);
          if (fm == 0.0) return mid;
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        return 0.5 * (lo + hi);
      }
    }
    a = b;
    fa = fb;
  }
  throw Error(ErrorKind::NotConverged, "zero " + std::to_string(k) + " of J_" + std::to_string(nu) +
                                           " not bracketed below " + std::to_string(x_max));
}

RadialMode radial_mode(int ell, int count, int num_sheets) {
  if (ell < 0 || count < 1 || num_sheets < 1) {
    throw Error(ErrorKind::InvalidConfig, "radial mode needs ell >= 0, count >= 1, sheets >= 1");
  }
  RadialMode m;
  m.ell = ell;
  m.nu = static_cast<double>(ell) / num_sheets;
  m.multiplicity = ell == 0 ? 1 : 2;
  for (int k = 1; k <= count; ++k) {
    const double j = bessel_zero_oracle(m.nu, k);
    m.eigenvalues.push_back(j * j);
  }
  return m;
}

std::vector<DiscLevel> disc_spectrum_oracle(int count, int num_sheets) {
  std::vector<DiscLevel> all;
  // Enough modes that the lowest `count` distinct levels are all present.
  const int max_ell = num_sheets * (count + 2);
  for (int ell = 0; ell <= max_ell; ++ell) {
    const RadialMode m = radial_mode(ell, count, num_sheets);
    for (int k = 0; k < count; ++k) all.push_back({m.eigenvalues[k], ell, k + 1, m.multiplicity});
  }
  std::sort(all.begin(), all.end(), [](const DiscLevel& a, const DiscLevel& b) { return a.value < b.value; });
  std::vector<DiscLevel> out;
  for (const DiscLevel& l : all) {
    if (!out.empty() && std::abs(l.value - out.back().value) < 1e-9 * l.value) {
      out.back().multiplicity += l.multiplicity;
      continue;
    }
    out.push_back(l);
    if (static_cast<int>(out.size()) == count) break;
  }
  return out;
}

EigenResult branched_disc_eigenvalues(const BranchedGrid& disc, int count, double tol) {
  if (!disc.is_disc()) throw Error(ErrorKind::GridMismatch, "expected a branched disc grid");
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "count must be positive");
  const DiscreteHamiltonian H = assemble_euclidean(disc);
  const SparseHermitian& A = H.op;
  const Eigen::Index n = static_cast<Eigen::Index>(A.rows());
  if (count > n) throw Error(ErrorKind::InvalidConfig, "count exceeds the grid size");

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nonzeros());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (auto k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k) {
      trips.emplace_back(r, A.cols()[k], A.re()[k]);
    }
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  const Eigen::SparseMatrix<double> Msym = 0.5 * (M + Eigen::SparseMatrix<double>(M.transpose()));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Msym);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::EigensolverNotConverged, "factorization of the disc Laplacian failed");
  }

  // Block Krylov space of A^{-1}: several start vectors resolve degenerate pairs.
  const int block = std::max(8, count + 4);
  const Eigen::Index max_basis = std::min<Eigen::Index>(n, 40 * block);
  Eigen::MatrixXd V(n, max_basis), AV(n, max_basis);
  Eigen::Index cols = 0;
  EigenResult res;

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::MatrixXd next(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) next(i, j) = uni(rng);

  while (true) {
    // Orthonormalize the candidate block against the basis (twice) and append.
    const Eigen::Index start = cols;
    for (Eigen::Index j = 0; j < next.cols() && cols < max_basis; ++j) {
      Eigen::VectorXd v = next.col(j);
      const double v0 = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (cols > 0) v -= V.leftCols(cols) * (V.leftCols(cols).transpose() * v);
      }
      const double nv = v.norm();
      if (nv < 1e-10 * v0) continue;
      V.col(cols++) = v / nv;
    }
    if (cols == start) throw Error(ErrorKind::EigensolverNotConverged, "Krylov space exhausted");
    for (Eigen::Index j = start; j < cols; ++j) {
      AV.col(j) = ldlt.solve(V.col(j));
      ++res.solves;
    }

    // Rayleigh-Ritz for A^{-1} on the current basis.
    Eigen::MatrixXd S = V.leftCols(cols).transpose() * AV.leftCols(cols);
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorKind::EigensolverNotConverged, "projected eigenproblem failed");
    }
    if (cols >= count) {
      res.values.assign(count, 0.0);
      res.residuals.assign(count, 0.0);
      bool converged = true;
      for (int m = 0; m < count; ++m) {
        const Eigen::Index idx = cols - 1 - m;  // largest theta = smallest lambda
        const double theta = es.eigenvalues()(idx);
        const Eigen::VectorXd x = V.leftCols(cols) * es.eigenvectors().col(idx);
        const double lambda = 1.0 / theta;
        const double r = (Msym * x - lambda * x).norm() / (std::abs(lambda) * x.norm());
        res.values[m] = lambda;
        res.residuals[m] = r;
        if (!(r <= tol)) converged = false;
      }
      if (converged) {
        res.basis_size = static_cast<int>(cols);
        return res;
      }
    }
    if (cols >= max_basis) {
      throw Error(ErrorKind::EigensolverNotConverged,
                  "residuals above " + std::to_string(tol) + " with basis " + std::to_string(cols));
    }
    next = AV.middleCols(start, cols - start);
  }
}

std::vector<LevelCluster> cluster_levels(const std::vector<double>& values, double rel_tol) {
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  std::vector<LevelCluster> out;
  double sum = 0.0;
  for (double x : v) {
    if (!out.empty() && std::abs(x - out.back().mean) <= rel_tol * std::abs(x)) {
      sum += x;
      ++out.back().multiplicity;
      out.back().mean = sum / out.back().multiplicity;
    } else {
      out.push_back({x, 1});
      sum = x;
    }
  }
  return out;
}

DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  DecayFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) continue;
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    lo = std::min(lo, x[k]);
    hi = std::max(hi, x[k]);
    ++n;
  }
  f.points = n;
  if (n < 2) return f;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  f.decades = std::log10(hi / lo);
  return f;
}

namespace {
// Samples at or below this magnitude sit in the quadrature noise and are not fitted.
constexpr double kFitFloor = 1e-13;
}  // namespace

PointwiseDecay stationary_phase_pointwise(const BandProfile& profile, double k0,
                                          const std::vector<double>& times, double offset) {
  PointwiseDecay out;
  const double width = profile.hi() - profile.lo();
  const double peak = std::abs(position_values(profile, k0, 0.0, {0.0}, 0.0)[0]);
  for (double t : times) {
    if (!(t > 0.0)) continue;
    const double xr = 2.0 * (k0 + profile.hi()) * t + offset * width * t;
    const double xl = 2.0 * (k0 + profile.lo()) * t - offset * width * t;
    const cvec v = position_values(profile, k0, 0.0, {xl, xr}, t);
    const bool right = std::abs(v[1]) >= std::abs(v[0]);
    const double x = right ? xr : xl;
    out.times.push_back(t);
    out.positions.push_back(x);
    out.distance.push_back(1.0 + std::abs(x - 2.0 * k0 * t) + t);
    out.magnitude.push_back(std::max(std::abs(v[0]), std::abs(v[1])));
  }
  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    if (out.magnitude[k] > kFitFloor * peak) {
      fx.push_back(out.distance[k]);
      fy.push_back(out.magnitude[k]);
    }
  }
  out.fit = fit_power_law(fx, fy);
  return out;
}

namespace {

struct TailIntegral {
  double mass = 0.0;
  double grad = 0.0;
};

// Psi and Psi' on x_j = (j - n/2) dx from one inverse FFT each of the
// sampled momentum integrand. The period n dx exceeds four times the packet
// extent, so wrapped images sit far out in the forbidden region.
struct LineSamples {
  double dx = 0.0;
  int n = 0;
  cvec value, deriv;
  double x(int j) const { return (j - n / 2) * dx; }
};

LineSamples sample_line(const BandProfile& profile, double k0, double x0, double t, double edge) {
  const double xi_lo = k0 + profile.lo(), xi_hi = k0 + profile.hi();
  const double xi_max = std::max(std::abs(xi_lo), std::abs(xi_hi));
  const double extent = std::abs(x0) + 2.0 * xi_max * t + std::abs(edge) + 512.0;
  double dx = std::min(0.1, std::numbers::pi / (4.0 * (xi_max + 1.0)));
  // Put the edge on a grid node.
  if (std::abs(edge) > 0.0) dx = std::abs(edge) / std::ceil(std::abs(edge) / dx);
  int n = 1024;
  while (n * dx < 4.0 * extent) n *= 2;

  LineSamples out;
  out.dx = dx;
  out.n = n;
  const double dxi = 2.0 * std::numbers::pi / (n * dx);
  const double xi_c = 0.5 * (xi_lo + xi_hi);
  const double xs = out.x(0);
  std::vector<std::complex<double>> g(n), gd(n);
  const double norm = dxi / std::sqrt(2.0 * std::numbers::pi);
  for (int m = 0; m < n; ++m) {
    const double off = (m - n / 2) * dxi;
    const double xi = xi_c + off;
    const double p = profile(xi - k0);
    if (p == 0.0) continue;
    const cplx v = norm * p * std::exp(cplx(0.0, -x0 * xi - t * xi * xi + xs * off));
    g[m] = v;
    gd[m] = cplx(0.0, xi) * v;
  }
  {
    std::lock_guard<std::mutex> lock(fft_planner_mutex());
    auto* buf = reinterpret_cast<fftw_complex*>(g.data());
    auto* bufd = reinterpret_cast<fftw_complex*>(gd.data());
    fftw_plan p1 = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_plan p2 = fftw_plan_dft_1d(n, bufd, bufd, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(p1);
    fftw_execute(p2);
    fftw_destroy_plan(p1);
    fftw_destroy_plan(p2);
  }
  out.value.resize(n);
  out.deriv.resize(n);
  for (int j = 0; j < n; ++j) {
    const cplx phase = std::exp(cplx(0.0, out.x(j) * xi_c)) * ((j % 2) ? -1.0 : 1.0);
    out.value[j] = phase * g[j];
    out.deriv[j] = phase * gd[j];
  }
  return out;
}

// Trapezoid integral of |Psi|^2 and |Psi'|^2 from `edge` outward in direction dir = +-1.
TailIntegral outward_tail(const BandProfile& profile, double k0, double x0, double t, double edge,
                          int dir) {
  const LineSamples line = sample_line(profile, k0, x0, t, edge);
  const int j0 = static_cast<int>(std::lround(edge / line.dx)) + line.n / 2;
  TailIntegral acc;
  const int j_end = dir > 0 ? line.n : -1;
  for (int j = j0; j != j_end; j += dir) {
    const double w = (j == j0 ? 0.5 : 1.0) * line.dx;
    acc.mass += w * std::norm(line.value[j]);
    acc.grad += w * std::norm(line.deriv[j]);
  }
  return acc;
}

double momentum_second_moment(const BandProfile& profile, double shift) {
  return integrate([&](double xi) {
           const double p = profile(xi);
           return (xi + shift) * (xi + shift) * p * p;
         },
         profile.lo(), profile.hi(), 1e-12)
      .value;
}

}  // namespace

TailDecay tail_mass_decay(const PacketSpec& spec, const std::vector<double>& times) {
  spec.validate();
  TailDecay out;
  out.hypothesis_ok = spec.s >= 2.0 * spec.a;
  const BandProfile px = spec.profile_x(), py = spec.profile_y();
  const double g1 = momentum_second_moment(px, 0.0);     // |psi1'|^2
  const double g2 = momentum_second_moment(py, spec.s);  // |psi2'|^2
  for (double t : times) {
    if (!(t > 0.0)) continue;
    const double st = spec.s * t;
    const TailIntegral r1 = outward_tail(px, 0.0, spec.k, t, st, +1);
    const TailIntegral l1 = outward_tail(px, 0.0, spec.k, t, -st, -1);
    const TailIntegral t1{r1.mass + l1.mass, r1.grad + l1.grad};
    const TailIntegral t2 = outward_tail(py, spec.s, 0.0, t, st, -1);
    // Outside mass of |g(x)|^2 |h(y)|^2 over the complement of a product set.
    auto outside = [](double G, double Gt, double Hn, double Ht) { return G * Ht + Gt * Hn - Gt * Ht; };
    out.times.push_back(t);
    out.st.push_back(1.0 + st);
    out.mass.push_back(outside(1.0, t1.mass, 1.0, t2.mass));
    out.grad_mass.push_back(outside(g1, t1.grad, 1.0, t2.mass) + outside(1.0, t1.mass, g2, t2.grad));
  }
  std::vector<double> x, m, g;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    // Large-time regime only.
    if (out.times[k] < 1.0 / spec.s) continue;
    if (out.mass[k] > kFitFloor) {
      x.push_back(out.st[k]);
      m.push_back(out.mass[k]);
    }
  }
  out.fit = fit_power_law(x, m);
  x.clear();
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    if (out.times[k] < 1.0 / spec.s) continue;
    if (out.grad_mass[k] > kFitFloor) {
      x.push_back(out.st[k]);
      g.push_back(out.grad_mass[k]);
    }
  }
  out.grad_fit = fit_power_law(x, g);
  return out;
}

LocalizationRow localization_error(const PacketSpec& spec, const LocalizationConfig& cfg) {
  spec.validate();
  if (!(cfg.h > 0.0) || !(cfg.window > 1.0) || cfg.fit_samples < 2) {
    throw Error(ErrorKind::InvalidConfig, "localization config needs h > 0, window > 1, fit_samples >= 2");
  }
  const double s = spec.s;
  const double tw = cfg.window / s;
  // The carrier removes the fast y oscillation; the grid covers the packet over the window.
  const double carrier = s + 0.5;
  const double ymax = 2.0 * (s + 1.0) * tw + 40.0;
  const double xmax = std::abs(spec.k) + 2.0 * spec.a * tw + 24.0;
  PlanarGrid g;
  g.h = cfg.h;
  g.nx = static_cast<int>(std::ceil(2.0 * xmax / g.h));
  g.ny = static_cast<int>(std::ceil(2.0 * ymax / g.h));
  g.x0 = -0.5 * (g.nx - 1) * g.h;
  g.y0 = -0.5 * (g.ny - 1) * g.h;
  const SourceTerm src(spec, g, carrier);
  auto norm_f = [&](double t) { return src.norm(t); };

  LocalizationRow row;
  row.s = s;
  bool have_fit = false;
  // Geometric panels around t = 0 where |f| peaks.
  for (int side : {-1, 1}) {
    double a = 0.0, b = 1.0 / s;
    while (a < tw) {
      b = std::min(b, tw);
      const double lo = side > 0 ? a : -b, hi = side > 0 ? b : -a;
      row.window_integral += integrate(norm_f, lo, hi, cfg.time_tol, 2, 1 << 10).value;
      a = b;
      b *= 2.0;
    }
    // Power-law tail beyond the window, fitted over the last two decades of it.
    std::vector<double> x, y;
    for (int k = 0; k < cfg.fit_samples; ++k) {
      const double t = tw / 100.0 * std::pow(100.0, static_cast<double>(k) / (cfg.fit_samples - 1));
      x.push_back(1.0 + s * t);
      y.push_back(norm_f(side * t));
    }
    const DecayFit fit = fit_power_law(x, y);
    // Report the slower of the two sides.
    if (!have_fit || fit.slope > row.fit.slope) row.fit = fit;
    have_fit = true;
    if (fit.points >= 2 && fit.slope < -1.0) {
      const double c = std::exp(fit.intercept);
      row.tail_integral += c * std::pow(1.0 + s * tw, fit.slope + 1.0) / (s * (-fit.slope - 1.0));
    } else if (fit.points >= 2) {
      row.tail_integral = std::numeric_limits<double>::infinity();
    }
  }
  row.integral = row.window_integral + row.tail_integral;
  return row;
}

std::vector<LocalizationRow> localization_error_decay(const PacketSpec& spec,
                                                      const std::vector<double>& s_values,
                                                      const LocalizationConfig& cfg) {
  std::vector<LocalizationRow> out;
  for (double s : s_values) {
    PacketSpec p = spec;
    p.s = s;
    out.push_back(localization_error(p, cfg));
  }
  return out;
}

}  // namespace branchwave
