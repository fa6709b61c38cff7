#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "branchwave/errors.hpp"
#include "branchwave/scattering.hpp"

using namespace branchwave;

namespace {

ErrorKind thrown_kind(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

ScatteringConfig small_config() {
  ScatteringConfig cfg;
  cfg.box = {-6.0, 6.0, -24.0, 24.0};
  cfg.h = 1.0 / 8.0;
  cfg.stepper = {0.01, 1e-10, 400};
  cfg.T = 0.1;
  cfg.stride = 2;
  cfg.throw_on_contamination = false;
  return cfg;
}

PacketSpec small_packet() {
  PacketSpec spec;
  spec.a = 2.0;
  spec.s = 8.0;
  return spec;
}

}  // namespace

TEST_CASE("window start is the first sample after which residuals stay small") {
  const std::vector<double> t{0.0, 0.1, 0.2, 0.3, 0.4};
  CHECK(window_start(t, {0.9, 0.1, 0.3, 0.1, 0.05}, 0.2) == doctest::Approx(0.3));
  CHECK(window_start(t, {0.9, 0.1, 0.1, 0.1, 0.05}, 0.2) == doctest::Approx(0.1));
  CHECK(std::isnan(window_start(t, {0.9, 0.5, 0.4, 0.3, 0.25}, 0.2)));
}

TEST_CASE("resolution rule uses the envelope band when the carrier is removed") {
  const PacketSpec spec = small_packet();
  ScatteringConfig cfg = small_config();
  ResolutionCheck r = resolution_check(spec, cfg);
  CHECK(r.k_max == doctest::Approx(3.0));
  CHECK(r.h_limit == doctest::Approx(M_PI / 6.0));
  CHECK(r.dt_limit == doctest::Approx(cfg.h / 12.0));
  CHECK(r.ok);
  cfg.use_carrier = false;
  r = resolution_check(spec, cfg);
  CHECK(r.k_max == doctest::Approx(11.0));
  CHECK_FALSE(r.ok);
}

TEST_CASE("configs reject inconsistent time stepping and launch points on the cut") {
  ScatteringConfig cfg = small_config();
  cfg.T = 0.105;
  CHECK(thrown_kind([&] { cfg.validate(); }) == ErrorKind::InvalidConfig);
  cfg = small_config();
  cfg.h = 2.0 / 7.0;
  CHECK(thrown_kind([&] { cfg.validate(); }) == ErrorKind::BranchPointOnGrid);

  PacketSpec spec = small_packet();
  CHECK(thrown_kind([&] { check_cut_clearance(spec); }) == ErrorKind::CutOverlap);
  spec.k = 3.0;
  CHECK_NOTHROW(check_cut_clearance(spec));
}

TEST_CASE("channel masses split the norm by sheet") {
  const ScatteringConfig cfg = small_config();
  const ScatteringSetup setup(cfg, 8.5);
  WaveField psi(setup.grid);
  for (std::size_t id = 0; id < setup.grid.size(); ++id) {
    const auto& n = setup.grid.node(id);
    if (n.sheet == 1) psi.values[id] = std::exp(-(n.x * n.x + (n.y - 6.0) * (n.y - 6.0)));
  }
  const ChannelMasses m = channel_masses(psi);
  CHECK(m.total[0] == 0.0);
  CHECK(m.sum_total() == doctest::Approx(psi.norm_sq()).epsilon(1e-12));
  CHECK(m.far[1] > 0.9 * m.total[1]);

  ChannelMassSeries series;
  series.push(0.0, m);
  std::ostringstream os;
  series.write_csv(os);
  CHECK(os.str().rfind("t,sheet0_mass,sheet1_mass,far0,far1,boundary\n", 0) == 0);
}

TEST_CASE("small transmission run is unitary and mirror symmetric") {
  ScatteringConfig cfg = small_config();
  cfg.with_s_entry = false;
  const TransmissionReport r = transmission_experiment(small_packet(), cfg);
  CHECK(r.norm_drift <= 1e-9);
  CHECK(r.times_forward.size() == 6);
  CHECK(r.residual_forward.front() == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(r.residual_forward.back() < r.residual_forward.front());
  CHECK(r.projection.forward_upper > r.projection.forward_lower);
  CHECK(std::abs(r.projection.forward_upper - r.projection.backward_lower) <= 1e-8);
  for (double d : r.duhamel_defect) CHECK(d <= 5e-2);

  cfg.run_backward = false;
  const TransmissionReport f = transmission_experiment(small_packet(), cfg);
  CHECK(f.times_backward.empty());
  CHECK(std::isnan(f.projection.backward_upper));
  CHECK(f.residual_forward.back() == doctest::Approx(r.residual_forward.back()).epsilon(1e-12));
}

TEST_CASE("transmission rows conserve mass") {
  const ScatteringConfig cfg = small_config();
  const PacketSpec spec = small_packet();
  const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
  const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
  const TransmissionRow row = transmission_row(setup, v0, 0, cfg.T, cfg.stepper);
  CHECK(row.row_sum == doctest::Approx(1.0).epsilon(1e-12));
  for (double m : row.mass_fraction) CHECK((m >= 0.0 && m <= 1.0));
  CHECK(row.far_fraction[1] <= row.mass_fraction[1]);
}
