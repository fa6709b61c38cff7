#include "branchwave/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "branchwave/errors.hpp"

namespace branchwave {

namespace {

GaussRule make_rule(int n) {
  if (n == 1) return {{0.0}, {2.0}};
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int k = 0; k < m; ++k) {
    double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // refresh derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n; ++l) {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[k] = -x;
    r.nodes[n - 1 - k] = x;
    r.weights[k] = w;
    r.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    if (n < 1) throw Error(ErrorKind::InvalidConfig, "Gauss rule order must be positive");
    it = cache.emplace(n, std::make_unique<GaussRule>(make_rule(n))).first;
  }
  return *it->second;
}

CompositeRule composite_gauss(double a, double b, int panels, int order) {
  const GaussRule& g = gauss_legendre(order);
  CompositeRule c;
  c.nodes.reserve(static_cast<std::size_t>(panels) * order);
  c.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    for (int k = 0; k < order; ++k) {
      c.nodes.push_back(lo + 0.5 * w * (g.nodes[k] + 1.0));
      c.weights.push_back(0.5 * w * g.weights[k]);
    }
  }
  return c;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                     int start_panels, int max_panels, int order) {
  auto eval = [&](int panels) {
    const CompositeRule c = composite_gauss(a, b, panels, order);
    double s = 0.0;
    for (std::size_t k = 0; k < c.nodes.size(); ++k) s += c.weights[k] * f(c.nodes[k]);
    return s;
  };
  int panels = std::max(1, start_panels);
  double prev = eval(panels);
  while (panels <= max_panels) {
    panels *= 2;
    const double cur = eval(panels);
    const double err = std::abs(cur - prev);
    if (err <= tol * std::max(1.0, std::abs(cur))) return {cur, err, panels};
    prev = cur;
  }
  throw Error(ErrorKind::QuadratureNotConverged,
              "panel doubling did not settle on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
}

}  // namespace branchwave
