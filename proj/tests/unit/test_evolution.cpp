#include <doctest.h>

#include <cmath>
#include <sstream>

#include "branchwave/errors.hpp"
#include "branchwave/evolution.hpp"
#include "branchwave/metricfield.hpp"
#include "branchwave/packets.hpp"

using namespace branchwave;

namespace {

WaveField gaussian_state(const BranchedGrid& g, double x0, double y0, double kx, double ky) {
  WaveField psi(g);
  for (std::size_t id = 0; id < g.size(); ++id) {
    const auto& n = g.node(id);
    if (n.sheet != 0) continue;
    const double r2 = (n.x - x0) * (n.x - x0) + (n.y - y0) * (n.y - y0);
    psi.values[id] = std::exp(-r2) * std::exp(cplx(0.0, kx * n.x + ky * n.y));
  }
  const double nrm = psi.norm();
  for (auto& v : psi.values) v /= nrm;
  return psi;
}

double distance(const WaveField& a, const WaveField& b) {
  cvec d = a.values;
  axpy(-1.0, b.values, d);
  return a.grid->h() * std::sqrt(norm_sq(d));
}

}  // namespace

TEST_CASE("assembled operators are Hermitian and nonnegative") {
  const BranchedGrid g = build_grid({}, 5.0, 0.25);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  CHECK(H.op.hermitian_defect() <= 1e-14);
  CHECK(H.op.is_real());
  const WaveField psi = gaussian_state(g, 0.3, 0.7, 1.0, -2.0);
  CHECK(H.energy(psi) > 0.0);

  const DiscreteHamiltonian Hc = assemble_euclidean(g, 3.5);
  CHECK(Hc.op.hermitian_defect() <= 1e-13);
  CHECK_FALSE(Hc.op.is_real());

  const DiscreteHamiltonian Hm = assemble_metric(g, metric_sampler(gaussian_bump_surface(0.5, 1.0, {0.0, 2.0})));
  CHECK(Hm.op.hermitian_defect() <= 1e-13);
  CHECK(Hm.is_metric());
}

TEST_CASE("flat metric reproduces the Euclidean operator") {
  const BranchedGrid g = build_grid({}, 5.0, 0.25);
  const DiscreteHamiltonian He = assemble_euclidean(g);
  const DiscreteHamiltonian Hf = assemble_metric(g, metric_sampler(zero_surface()));
  const WaveField psi = gaussian_state(g, -0.5, 0.5, 2.0, 1.0);
  cvec a(g.size()), b(g.size());
  He.op.apply(psi.values, a);
  Hf.op.apply(psi.values, b);
  axpy(-1.0, a, b);
  CHECK(std::sqrt(norm_sq(b)) <= 1e-12 * std::sqrt(norm_sq(a)));
}

TEST_CASE("the Laplacian reproduces -(d2/dx2 + d2/dy2) on smooth data away from the cut") {
  const BranchedGrid g = build_grid({}, 6.0, 1.0 / 16.0);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  WaveField psi(g);
  for (std::size_t id = 0; id < g.size(); ++id) {
    const auto& n = g.node(id);
    psi.values[id] = std::exp(-(n.x * n.x + (n.y - 3.0) * (n.y - 3.0)));
  }
  cvec Hpsi(g.size());
  H.op.apply(psi.values, Hpsi);
  // -lap exp(-r^2) = (4 - 4 r^2) exp(-r^2)
  for (int i : {-8, 0, 5}) {
    const auto id = static_cast<std::size_t>(g.index(0, i, 48));
    const auto& n = g.node(id);
    const double r2 = n.x * n.x + (n.y - 3.0) * (n.y - 3.0);
    CHECK(std::abs(Hpsi[id].real() - (4.0 - 4.0 * r2) * std::exp(-r2)) <= 1e-2);
  }
}

TEST_CASE("Crank-Nicolson conserves the norm") {
  const BranchedGrid g = build_grid({}, 5.0, 0.125);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  const WaveField psi0 = gaussian_state(g, 0.0, -2.0, 0.0, 3.0);
  const EvolveResult r = evolve(H, psi0, 0.2, {0.002, 1e-12, 400});
  CHECK(r.steps == 100);
  CHECK(std::abs(r.final_norm / r.initial_norm - 1.0) <= 1e-9);
  CHECK(r.max_residual <= 1e-10);
}

TEST_CASE("Crank-Nicolson is second order in time") {
  const BranchedGrid g = build_grid({}, 5.0, 0.125);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  const WaveField psi0 = gaussian_state(g, 0.0, -2.0, 0.0, 2.0);
  const double T = 0.032;
  std::vector<WaveField> out;
  for (double dt : {0.002, 0.001, 0.0005}) out.push_back(evolve(H, psi0, T, {dt, 1e-13, 400}).final_state);
  const double ratio = distance(out[0], out[1]) / distance(out[1], out[2]);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("forward then backward evolution returns the initial state") {
  const BranchedGrid g = build_grid({}, 5.0, 0.125);
  const DiscreteHamiltonian H = assemble_euclidean(g, 2.5);
  const WaveField psi0 = gaussian_state(g, 0.0, -1.5, 1.0, 0.0);
  const StepperConfig st{0.004, 1e-13, 400};
  const WaveField fwd = evolve(H, psi0, 0.08, st).final_state;
  const WaveField back = evolve(H, fwd, -0.08, st).final_state;
  CHECK(distance(back, psi0) <= 1e-9);
}

TEST_CASE("boundary monitor flags mass in the outer margin") {
  const BranchedGrid g = build_grid({}, 5.0, 0.125);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  const WaveField psi0 = gaussian_state(g, 0.0, 4.6, 0.0, 0.0);
  BoundaryMonitor m;
  m.throw_on_contamination = true;
  CHECK_THROWS_AS(evolve(H, psi0, 0.01, {0.005, 1e-10, 400}, {}, m), Error);
  m.throw_on_contamination = false;
  const EvolveResult r = evolve(H, psi0, 0.01, {0.005, 1e-10, 400}, {}, m);
  CHECK(r.contaminated);
  CHECK(r.max_boundary_mass > m.threshold);
}

TEST_CASE("observers fire at step zero and every stride") {
  const BranchedGrid g = build_grid({}, 5.0, 0.25);
  const DiscreteHamiltonian H = assemble_euclidean(g);
  std::vector<int> steps;
  Observer obs{3, [&](int s, double, const WaveField&) { steps.push_back(s); }};
  evolve(H, gaussian_state(g, 0.0, 2.0, 0.0, 0.0), 0.1, {0.01, 1e-10, 400}, {obs});
  CHECK(steps == std::vector<int>{0, 3, 6, 9});
}

TEST_CASE("snapshots round-trip through the binary format") {
  const BranchedGrid g = build_grid({}, 5.0, 0.5);
  const WaveField psi = gaussian_state(g, 0.5, 0.5, 1.0, 1.0);
  std::stringstream ss;
  write_snapshot(ss, psi);
  const std::string bytes = ss.str();
  CHECK(bytes.size() == 3 * 8 + 8 + 2 * 20 * 20 * 16);
  const Snapshot s = read_snapshot(ss);
  CHECK(s.n_sheets == 2);
  CHECK(s.nx == 20);
  CHECK(s.ny == 20);
  CHECK(s.h == 0.5);
  const auto id = static_cast<std::size_t>(g.index(0, 1, 1));
  const std::size_t flat = 0 * 400 + static_cast<std::size_t>(1 - g.j_lo()) * 20 + (1 - g.i_lo());
  CHECK(s.values[flat] == psi.values[id]);
}

TEST_CASE("envelope and physical amplitudes are inverse maps") {
  const BranchedGrid g = build_grid({}, 5.0, 0.25);
  const WaveField phi = gaussian_state(g, 0.0, 0.0, 1.0, 0.0);
  const WaveField back = physical_to_envelope(envelope_to_physical(phi, 4.5, 0.3), 4.5, 0.3);
  CHECK(distance(back, phi) <= 1e-14);
}
