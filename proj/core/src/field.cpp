#include "branchwave/field.hpp"

#include <cmath>

namespace branchwave {

double WaveField::norm() const { return std::sqrt(norm_sq()); }

std::vector<double> PlanarGrid::xs() const {
  std::vector<double> v(nx);
  for (int i = 0; i < nx; ++i) v[i] = x(i);
  return v;
}

std::vector<double> PlanarGrid::ys() const {
  std::vector<double> v(ny);
  for (int j = 0; j < ny; ++j) v[j] = y(j);
  return v;
}

PlanarGrid planar_grid_of(const BranchedGrid& g) {
  return {g.x_of(g.i_lo()), g.y_of(g.j_lo()), g.h(), g.nx(), g.ny()};
}

}  // namespace branchwave
