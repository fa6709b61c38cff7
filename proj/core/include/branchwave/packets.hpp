#pragma once

#include <functional>
#include <vector>

#include "branchwave/cutoff.hpp"
#include "branchwave/field.hpp"
#include "branchwave/geometry.hpp"
#include "branchwave/parallel.hpp"

namespace branchwave {

enum class ProfileShape { Bump, TruncatedGaussian };

// Compactly supported momentum profile with unit L2 norm.
class BandProfile {
 public:
  BandProfile() = default;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  ProfileShape shape() const { return shape_; }
  double scale() const { return c_; }
  double operator()(double xi) const;
  // Integral of phi^2 by an independent high-order rule.
  double norm_sq() const;

  friend BandProfile bump_profile(double lo, double hi);
  friend BandProfile truncated_gaussian_profile(double sigma, double half_width);

 private:
  double shape_value(double xi) const;

  double lo_ = -1.0, hi_ = 1.0;
  double c_ = 1.0;
  double sigma_ = 1.0;
  ProfileShape shape_ = ProfileShape::Bump;
};

// phi(xi) = c exp(-1/(1 - tau^2)), tau = (2 xi - lo - hi)/(hi - lo).
BandProfile bump_profile(double lo, double hi);

// phi(xi) = c exp(-xi^2 / (2 sigma^2)) on [-half_width, half_width].
BandProfile truncated_gaussian_profile(double sigma, double half_width);

// Psi(x, t) = (2 pi)^{-1/2} int phi(xi - k0) exp(i (x - x0) xi - i t xi^2) dxi.
// With `derivative` the integrand carries an extra factor i xi (d/dx Psi).
cvec position_values(const BandProfile& profile, double k0, double x0,
                     const std::vector<double>& xs, double t, bool derivative = false);

// Values and x-derivatives from one adaptive quadrature pass.
void position_values_and_derivative(const BandProfile& profile, double k0, double x0,
                                    const std::vector<double>& xs, double t, cvec& values,
                                    cvec& derivatives);

// Parameters of the product packet u0 = psi1(x - k) psi2(y).
struct PacketSpec {
  double a = 16.0;    // supp phi1 = [-a, a]
  double s = 32.0;    // supp of the shifted phi2 = [s, s + 1]
  double k = 0.0;     // lateral shift of psi1
  double eps = 0.2;   // target accuracy

  double eps_prime() const { return eps / 5.0; }
  void validate() const;
  BandProfile profile_x() const { return bump_profile(-a, a); }
  BandProfile profile_y() const { return bump_profile(0.0, 1.0); }
};

struct LocalizationCheck {
  double mass = 0.0;   // || 1_{(-1/4,1/4)} psi1 ||
  bool satisfied = false;
};

// Mass of psi1 = F^{-1}[bump(-a, a)] on (-1/4, 1/4) against 1 - eps'.
LocalizationCheck check_localization(double a, double eps_prime);

// Factors of the free evolution on the product grid xs x ys: value[j * nx + i].
// With a nonzero carrier the y factor is the envelope
// exp(-i carrier y + i carrier^2 t) Psi2(y, t).
struct ProductSample {
  cvec psi1, dpsi1;  // on xs
  cvec psi2, dpsi2;  // on ys
};
ProductSample packet_factors(const PacketSpec& spec, const std::vector<double>& xs,
                             const std::vector<double>& ys, double t, bool with_derivatives,
                             double carrier = 0.0);

PlanarField packet_values(const PacketSpec& spec, const PlanarGrid& grid, double t,
                          double carrier = 0.0);

// v0 = chi * u0 with the cutoff translated by spec.k.
PlanarField truncated_packet(const PacketSpec& spec, const PlanarGrid& grid, double t = 0.0,
                             double carrier = 0.0);

// Source term f = -2i grad(chi) . grad(u) - i u lap(chi) of the truncated
// evolution, as an envelope when carrier != 0.
class SourceTerm {
 public:
  SourceTerm(const PacketSpec& spec, const PlanarGrid& grid, double carrier = 0.0);

  double norm(double t) const;
  PlanarField field(double t) const;
  std::size_t layer_nodes() const { return layer_.size(); }

 private:
  struct LayerNode {
    int i, j;
    double dx, dy, lap;
  };
  void for_each_value(double t, const std::function<void(const LayerNode&, cplx)>& fn) const;
  PacketSpec spec_;
  PlanarGrid grid_;
  double carrier_ = 0.0;
  std::vector<LayerNode> layer_;
};

// Lift a planar field sampled on the grid's node coordinates onto the
// covering: y < 0 goes to `low_sheet`, y > 0 to monodromy(low_sheet).
WaveField lift_to_cover(const PlanarField& v, const BranchedGrid& grid, int low_sheet = 0);

// Place the whole planar field on one sheet.
WaveField place_on_sheet(const PlanarField& v, const BranchedGrid& grid, int sheet);

}  // namespace branchwave
