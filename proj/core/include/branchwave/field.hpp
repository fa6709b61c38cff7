#pragma once

#include <vector>

#include "branchwave/geometry.hpp"
#include "branchwave/parallel.hpp"

namespace branchwave {

// Complex amplitude per grid node; squared norm is h^2 * sum |value|^2.
struct WaveField {
  const BranchedGrid* grid = nullptr;
  cvec values;

  WaveField() = default;
  explicit WaveField(const BranchedGrid& g) : grid(&g), values(g.size(), cplx(0.0, 0.0)) {}

  double norm_sq() const { return grid->h() * grid->h() * branchwave::norm_sq(values); }
  double norm() const;
};

// Uniform planar sampling grid, row-major storage value[j * nx + i].
struct PlanarGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 0.1;
  int nx = 0;
  int ny = 0;

  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return y0 + j * h; }
  std::vector<double> xs() const;
  std::vector<double> ys() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
};

// Planar grid whose nodes coincide with one sheet of a branched grid.
PlanarGrid planar_grid_of(const BranchedGrid& g);

struct PlanarField {
  PlanarGrid grid;
  cvec values;

  double norm_sq() const { return grid.h * grid.h * branchwave::norm_sq(values); }
};

}  // namespace branchwave
