#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "branchwave/evolution.hpp"
#include "branchwave/geometry.hpp"

namespace branchwave {

struct SurfaceDerivatives {
  double f = 0.0;
  double fx = 0.0, fy = 0.0;
  double fxx = 0.0, fxy = 0.0, fyy = 0.0;

  double grad_sq() const { return fx * fx + fy * fy; }
};

// |grad f|^2 <= C |p|^{-q} for |p| >= R0, q > 2.
struct DecayEnvelope {
  double C = 0.0;
  double q = 3.0;
  double R0 = 1.0;
};

// Height function f on the covering with analytic derivatives.
struct SurfaceFunction {
  std::string name;
  std::function<SurfaceDerivatives(double x, double y, int sheet)> eval;
  std::optional<double> beta_bar;   // sup |D_i f|
  std::optional<double> gamma_bar;  // sup |D_ij f|
  std::optional<DecayEnvelope> envelope;
  // Integral of |grad f|^2 over one active sheet outside the disc of radius R
  // about the origin, when a closed form is known.
  std::function<double(double R)> gradient_tail;
  int sheet = -1;  // -1: the same function on every sheet

  SurfaceDerivatives at(double x, double y, int s) const;
  SurfaceDerivatives at(const SheetPoint& p) const { return at(p.x, p.y, p.sheet); }
  bool active_on(int s) const { return sheet < 0 || sheet == s; }
};

SurfaceFunction zero_surface();
SurfaceFunction linear_surface(double ax, double ay);
// f = c (x^2 + y^2) / 2
SurfaceFunction paraboloid_surface(double c);
// f = A exp(-|p - center|^2 / sigma^2), optionally on a single sheet.
SurfaceFunction gaussian_bump_surface(double amplitude, double sigma, Vec2 center, int sheet = -1);
SurfaceFunction scaled_surface(const SurfaceFunction& base, double factor);

// Pointwise graph metric g_f = I + grad f grad f^T.
struct MetricSample {
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;
  double det() const { return g11 * g22 - g12 * g12; }
  // Eigenvalues are 1 and det g.
  double alpha1() const { return 1.0; }
  double alpha2() const { return det(); }
};
MetricSample metric_at(const SurfaceFunction& f, const SheetPoint& p);
MetricSampler metric_sampler(const SurfaceFunction& f);

double gauss_curvature(const SurfaceFunction& f, const SheetPoint& p);

// |alpha2^{1/2} - alpha2^{-1/2}| = z / sqrt(1 + z) with z = |grad f|^2.
double dtilde(const SurfaceFunction& f, const SheetPoint& p);
double dtilde_from_grad_sq(double z);

double d0(const SheetPoint& p, const CoveringSpec& spec = {});
double r0_default(const SheetPoint& p, double rho, const CoveringSpec& spec = {});

// Square region [-radius, radius]^2 on every sheet, scanned with the given pitch.
struct MetricDomain {
  double radius = 12.0;
  double pitch = 0.05;
  int num_sheets = 2;
};

struct LatticeMax {
  double value = 0.0;
  double pitch = 0.0;  // final pitch after refinement
  bool stable = false;
};

// sup over the domain lattice, refined by halving until two passes agree to 1%.
LatticeMax lattice_max(const std::function<double(double, double, int)>& g, const MetricDomain& dom);

struct DInfResult {
  double value = 0.0;
  std::optional<double> declared_bound;
  bool lower_confidence = true;  // lattice search, not a rigorous supremum
};
DInfResult dtilde_inf(const SurfaceFunction& f, const MetricDomain& dom);

struct WeightedIntegral {
  double interior = 0.0;  // quadrature over the disc of radius R on all sheets
  double tail = 0.0;      // bound for the complement
  double value = 0.0;     // interior + tail
  bool tail_from_closed_form = false;
  bool branch_regular = true;  // integrand weight is integrable at q+-
  double radius = 0.0;
};

// Integral of dtilde * r0^{-4} with r0 = rho d0 over all sheets.
WeightedIntegral dtilde_1(const SurfaceFunction& f, double rho, const MetricDomain& dom,
                          const CoveringSpec& spec = {});
// Integral of |grad f|^2 d0^{-4}.
WeightedIntegral graph_condition_integral(const SurfaceFunction& f, const MetricDomain& dom,
                                          const CoveringSpec& spec = {});

// ---------------------------------------------------------------------------
// Injectivity-radius lower bounds

struct BoundValue {
  double value = 0.0;
  bool flagged = false;  // K <= 0 limit taken in the comparison bound
};

BoundValue inj_bound_comparison(double eta, double K, double inj0);
double inj_bound_global(double beta, double gamma);

// Derivative bound of the radial cutoff equal to 1 on B1, supported in B2.
double cutoff_constant();
// Coefficient bound of the order-2 reflection extension.
inline constexpr double kExtensionConstant = 3.0;

struct LocalBound {
  double value = 0.0;
  double beta = 0.0, gamma = 0.0;
  double c = 0.0;
  bool lower_confidence = true;
};

// min{1, (1 + 2 c^2 beta^2)^{-2} (gamma + c beta)^{-1}} with beta, gamma over the
// closed disc of radius 2 about p0 (on the sheet of p0), c = cutoff_constant().
LocalBound inj_bound_local(const SurfaceFunction& f, const SheetPoint& p0);
// Punctured-plane version about the origin with c = cutoff_constant() * kExtensionConstant.
LocalBound inj_bound_punctured(const SurfaceFunction& f, const SheetPoint& p0);

struct CoveringBound {
  double value = 0.0;
  double c_f = 0.0;
};
double covering_constant(const SurfaceFunction& f);
CoveringBound inj_bound_covering(const SurfaceFunction& f, const SheetPoint& p,
                                 const CoveringSpec& spec = {});

// ---------------------------------------------------------------------------
// Admissibility

struct AdmissibilityReport {
  double eta = 1.0;
  double sup_grad_sq = 0.0;
  double d_inf = 0.0;
  WeightedIntegral d_1;
  double curvature_bound = 0.0;  // K used in the checks
  double curvature_lattice = 0.0;
  std::optional<double> curvature_declared;
  double c_f = 0.0;
  double rho = 0.0;
  double rho_max = 0.0;  // min{1/2, 1/sqrt K, c_f}
  std::string r0_description;
  bool member_r0 = false;
  bool member = false;
  std::vector<std::string> failing;
  bool lower_confidence = true;
};

AdmissibilityReport membership(const SurfaceFunction& f, double rho, double gamma_dist, double eps,
                               const MetricDomain& dom, const CoveringSpec& spec = {});

}  // namespace branchwave
