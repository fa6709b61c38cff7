#pragma once

#include <vector>

#include "branchwave/geometry.hpp"
#include "branchwave/packets.hpp"

namespace branchwave {

// J_nu(x) from its power series in extended precision; meant for x <= 40.
double bessel_j(double nu, double x);

// k-th positive zero of J_nu by sign-change bracketing and bisection.
double bessel_zero_oracle(double nu, int k);

// Angular mode ell on the double cover: Bessel order ell/2, Dirichlet
// eigenvalues on the unit disc are squared zeros.
struct RadialMode {
  int ell = 0;
  double nu = 0.0;
  std::vector<double> eigenvalues;
  int multiplicity = 1;
};
RadialMode radial_mode(int ell, int count, int num_sheets = 2);

struct DiscLevel {
  double value = 0.0;
  int ell = 0;
  int k = 0;
  int multiplicity = 1;
};
// Lowest distinct Dirichlet levels of the n-sheeted unit disc branched at the origin.
std::vector<DiscLevel> disc_spectrum_oracle(int count, int num_sheets = 2);

struct EigenResult {
  std::vector<double> values;     // ascending
  std::vector<double> residuals;  // |A x - lambda x| / lambda
  int basis_size = 0;
  int solves = 0;
};

// Smallest `count` eigenvalues of the Dirichlet Laplacian on a branched disc
// grid by block Lanczos on A^{-1} with full reorthogonalization.
EigenResult branched_disc_eigenvalues(const BranchedGrid& disc, int count, double tol = 1e-8);

struct LevelCluster {
  double mean = 0.0;
  int multiplicity = 0;
};
// Groups sorted values whose relative gap is below rel_tol.
std::vector<LevelCluster> cluster_levels(const std::vector<double>& values, double rel_tol);

// Least-squares line through (log x, log y).
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
  double decades = 0.0;  // log10(max x / min x) over the fitted points
};
DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

// |Psi| on the classically forbidden side, at distance `offset` times the
// band width beyond the fastest group velocity, against 1 + |x - 2 k0 t| + t.
struct PointwiseDecay {
  std::vector<double> times, positions, distance, magnitude;
  DecayFit fit;
};
PointwiseDecay stationary_phase_pointwise(const BandProfile& profile, double k0,
                                          const std::vector<double>& times, double offset = 1.0);

// Mass of u(t) outside Q = [-s t, s t] x [s t, inf), and of its gradient.
struct TailDecay {
  std::vector<double> times, st, mass, grad_mass;
  DecayFit fit, grad_fit;
  bool hypothesis_ok = false;  // s >= 2a
};
TailDecay tail_mass_decay(const PacketSpec& spec, const std::vector<double>& times);

struct LocalizationConfig {
  double h = 1.0 / 16.0;
  double window = 64.0;       // integrate |f| over |t| <= window / s
  double time_tol = 1e-4;     // relative tolerance of the time quadrature
  int fit_samples = 12;
};

struct LocalizationRow {
  double s = 0.0;
  double integral = 0.0;         // window + extrapolated tails
  double window_integral = 0.0;
  double tail_integral = 0.0;
  DecayFit fit;                  // |f(t)| against 1 + s|t| over the late window
};
LocalizationRow localization_error(const PacketSpec& spec, const LocalizationConfig& cfg = {});
std::vector<LocalizationRow> localization_error_decay(const PacketSpec& spec,
                                                      const std::vector<double>& s_values,
                                                      const LocalizationConfig& cfg = {});

}  // namespace branchwave
