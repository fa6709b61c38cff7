#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace branchwave {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached n-point Gauss-Legendre rule (Newton iteration on P_n).
const GaussRule& gauss_legendre(int n);

// Composite rule: `panels` equal panels of `order` points on [a, b].
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
CompositeRule composite_gauss(double a, double b, int panels, int order = 16);

struct QuadResult {
  double value = 0.0;
  double estimate_error = 0.0;
  int panels = 0;
};

// Composite Gauss-Legendre with panel doubling until two successive results
// agree to `tol` (relative to max(1, |value|) unless abs_floor is given).
// Throws QuadratureNotConverged when max_panels is exceeded.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-9, int start_panels = 4, int max_panels = 1 << 14,
                     int order = 16);

}  // namespace branchwave
