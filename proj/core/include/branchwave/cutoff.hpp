#pragma once

#include <vector>

#include "branchwave/field.hpp"
#include "branchwave/geometry.hpp"

namespace branchwave {

// Radial Friedrichs mollifier of radius 1/4 with unit mass.
struct Mollifier {
  static constexpr double kRadius = 0.25;

  static double value(double r);
  static double derivative(double r);
  // Partial mass: integral of value(rho) rho drho over [0, r]; 2 pi mass(R) = 1.
  static double mass(double r);
};

struct CutoffSample {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double lap = 0.0;
};

// Mollified indicator of the double cone {|x - shift| < 1/2 + |y|}.
class ConeCutoff {
 public:
  static constexpr double kHalfWidth = 0.5;

  explicit ConeCutoff(double shift = 0.0) : shift_(shift) {}

  double shift() const { return shift_; }
  bool in_cone(Vec2 p) const;
  // Euclidean distance to the cone boundary (four rays).
  double boundary_distance(Vec2 p) const;
  // Points where chi is not locally constant.
  bool in_layer(Vec2 p) const { return boundary_distance(p) < Mollifier::kRadius; }
  CutoffSample eval(Vec2 p) const;
  double value(Vec2 p) const { return eval(p).value; }

 private:
  double shift_;
};

struct CutoffField {
  PlanarGrid grid;
  std::vector<double> chi, dx, dy, lap;
};

CutoffField build_cutoff(const PlanarGrid& grid, double shift = 0.0);

}  // namespace branchwave
