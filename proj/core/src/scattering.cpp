#include "branchwave/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <numeric>
#include <ostream>

#include "branchwave/cutoff.hpp"
#include "branchwave/errors.hpp"
#include "branchwave/free_propagator.hpp"

namespace branchwave {

double ChannelMasses::sum_total() const { return std::accumulate(total.begin(), total.end(), 0.0); }
double ChannelMasses::sum_far() const { return std::accumulate(far.begin(), far.end(), 0.0); }

ChannelMasses channel_masses(const WaveField& psi, double r_far) {
  const BranchedGrid& g = *psi.grid;
  const int n = g.num_sheets();
  ChannelMasses m;
  m.total.assign(n, 0.0);
  m.far.assign(n, 0.0);
  const double r2 = r_far * r_far;
  for (std::size_t id = 0; id < g.size(); ++id) {
    const auto& nd = g.node(id);
    const double v = std::norm(psi.values[id]);
    m.total[nd.sheet] += v;
    if (nd.x * nd.x + nd.y * nd.y > r2) m.far[nd.sheet] += v;
  }
  const double w = g.h() * g.h();
  for (int s = 0; s < n; ++s) {
    m.total[s] *= w;
    m.far[s] *= w;
  }
  m.boundary = boundary_margin_mass(psi, 0.05);
  return m;
}

void ChannelMassSeries::push(double t, ChannelMasses m) {
  times.push_back(t);
  samples.push_back(std::move(m));
}

void ChannelMassSeries::write_csv(std::ostream& os) const {
  const std::size_t n = samples.empty() ? 0 : samples.front().total.size();
  os << "t";
  for (std::size_t s = 0; s < n; ++s) os << ",sheet" << s << "_mass";
  for (std::size_t s = 0; s < n; ++s) os << ",far" << s;
  os << ",boundary\n";
  os.precision(12);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    os << times[k];
    for (double v : samples[k].total) os << ',' << v;
    for (double v : samples[k].far) os << ',' << v;
    os << ',' << samples[k].boundary << '\n';
  }
}

void ScatteringConfig::validate() const {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidConfig, "h must be positive");
  if (num_sheets < 2) throw Error(ErrorKind::InvalidConfig, "num_sheets must be at least 2");
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidConfig, "T must be positive");
  if (stride < 1) throw Error(ErrorKind::InvalidConfig, "stride must be at least 1");
  if (duhamel_substeps < 1) throw Error(ErrorKind::InvalidConfig, "duhamel_substeps must be at least 1");
  if (!(r_far > 0.0)) throw Error(ErrorKind::InvalidConfig, "r_far must be positive");
  stepper.validate();
  check_branch_point_avoidance(h);
  steps();
}

int ScatteringConfig::steps() const {
  const double ratio = T / std::abs(stepper.dt);
  const long long n = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-6) {
    throw Error(ErrorKind::InvalidConfig, "T must be an integer multiple of dt");
  }
  return static_cast<int>(n);
}

ResolutionCheck resolution_check(const PacketSpec& spec, const ScatteringConfig& cfg) {
  ResolutionCheck r;
  r.k_max = cfg.use_carrier ? spec.a + 1.0 : spec.s + 1.0 + spec.a;
  r.h_limit = 0.5 * M_PI / r.k_max;
  r.dt_limit = cfg.h / (4.0 * r.k_max);
  r.ok = cfg.h <= r.h_limit * (1.0 + 1e-12) && std::abs(cfg.stepper.dt) <= r.dt_limit * (1.0 + 1e-12);
  return r;
}

namespace {

void require_resolution(const PacketSpec& spec, const ScatteringConfig& cfg) {
  if (!cfg.enforce_resolution) return;
  const ResolutionCheck r = resolution_check(spec, cfg);
  if (!r.ok) {
    throw Error(ErrorKind::ResolutionViolation,
                "need h <= " + std::to_string(r.h_limit) + " and dt <= " + std::to_string(r.dt_limit) +
                    " for momenta up to " + std::to_string(r.k_max));
  }
}

BranchedGrid grid_for(const ScatteringConfig& cfg) {
  CoveringSpec cov;
  cov.num_sheets = cfg.num_sheets;
  GridOptions opt;
  opt.cut_mode = cfg.cut_mode;
  return build_box_grid(cov, cfg.box, cfg.h, opt);
}

std::size_t plane_index(const BranchedGrid& g, const BranchedGrid::Node& nd, int nx) {
  return static_cast<std::size_t>(nd.j - g.j_lo()) * nx + static_cast<std::size_t>(nd.i - g.i_lo());
}

double sheet_mass_fraction(const ChannelMasses& m, int sheet) {
  const double tot = m.sum_total();
  return tot > 0.0 ? m.total[sheet] / tot : 0.0;
}

// chi * u(t) on the plane with a precomputed cutoff.
PlanarField truncated_with(const PacketSpec& spec, const CutoffField& chi, double t, double carrier) {
  PlanarField u = packet_values(spec, chi.grid, t, carrier);
  for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] *= chi.chi[k];
  return u;
}

PlanarField difference(const PlanarField& a, const PlanarField& b) {
  PlanarField d = a;
  for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= b.values[k];
  return d;
}

}  // namespace

ScatteringSetup::ScatteringSetup(const ScatteringConfig& cfg, double carrier_)
    : grid(grid_for(cfg)), plane(planar_grid_of(grid)), carrier(carrier_) {
  H = cfg.metric ? assemble_metric(grid, metric_sampler(*cfg.metric), carrier)
                 : assemble_euclidean(grid, carrier);
  monitor.throw_on_contamination = cfg.throw_on_contamination;
}

WaveField ScatteringSetup::inject(const PlanarField& v, int sheet) const {
  WaveField w = place_on_sheet(v, grid, sheet);
  return H.is_metric() ? to_flat(H, w) : w;
}

double ScatteringSetup::distance(const WaveField& psi, const PlanarField& v, int sheet) const {
  double acc = 0.0;
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const auto& nd = grid.node(id);
    cplx ref(0.0, 0.0);
    if (nd.sheet == sheet) {
      ref = v.values[plane_index(grid, nd, plane.nx)];
      if (H.is_metric()) ref *= std::sqrt(H.weights[id]);
    }
    acc += std::norm(psi.values[id] - ref);
  }
  return grid.h() * std::sqrt(acc);
}

cplx ScatteringSetup::overlap(const WaveField& psi, const PlanarField& v, int sheet) const {
  cplx acc(0.0, 0.0);
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const auto& nd = grid.node(id);
    if (nd.sheet != sheet) continue;
    cplx ref = v.values[plane_index(grid, nd, plane.nx)];
    if (H.is_metric()) ref *= std::sqrt(H.weights[id]);
    acc += psi.values[id] * std::conj(ref);
  }
  return grid.h() * grid.h() * acc;
}

double window_start(const std::vector<double>& times, const std::vector<double>& residuals,
                    double eps) {
  double start = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = residuals.size(); k-- > 0;) {
    if (!(residuals[k] < eps)) break;
    start = std::abs(times[k]);
  }
  return start;
}

namespace {

struct DirectionalRun {
  std::vector<double> times, residual, truncated_residual, duhamel_defect;
  ChannelMassSeries series;
  EvolveResult result;
  double max_pad_mass = 0.0;
};

// Evolve the flat state w0 by signed time T and compare against J_sheet of the
// free evolution of v0 at every observer sample.
DirectionalRun run_direction(const ScatteringSetup& setup, const PacketSpec& spec,
                             const ScatteringConfig& cfg, const PlanarField& v0,
                             const CutoffField& chi, const WaveField& w0, double T, int ref_sheet) {
  DirectionalRun run;
  FreePropagator prop(setup.plane, setup.carrier);
  std::optional<SourceTerm> source;
  PlanarField duhamel, f_prev;
  const double delta = std::copysign(cfg.stride * std::abs(cfg.stepper.dt), T);
  if (cfg.duhamel_check) {
    source.emplace(spec, setup.plane, setup.carrier);
    duhamel = v0;
    std::fill(duhamel.values.begin(), duhamel.values.end(), cplx(0.0, 0.0));
  }
  const double w0_norm = w0.norm();
  const double v0_norm = std::sqrt(v0.norm_sq());

  Observer obs;
  obs.stride = cfg.stride;
  obs.callback = [&](int step, double t, const WaveField& psi) {
    run.series.push(t, channel_masses(psi, cfg.r_far));
    const PlanarField ref = prop.propagate(v0, t);
    run.max_pad_mass = std::max(run.max_pad_mass, prop.last_pad_mass());
    run.times.push_back(t);
    run.residual.push_back(setup.distance(psi, ref, ref_sheet) / w0_norm);
    const PlanarField truncated = truncated_with(spec, chi, t, setup.carrier);
    run.truncated_residual.push_back(setup.distance(psi, truncated, ref_sheet) / w0_norm);
    if (source) {
      // D(t) = int_0^t exp(-i (t - tau) A0) f(tau) dtau by the trapezoid rule.
      PlanarField f = source->field(t);
      if (step > 0) {
        const int m = cfg.duhamel_substeps;
        const double d = delta / m;
        for (int q = 1; q <= m; ++q) {
          for (std::size_t k = 0; k < duhamel.values.size(); ++k) {
            duhamel.values[k] += 0.5 * d * f_prev.values[k];
          }
          duhamel = prop.propagate(duhamel, d);
          PlanarField fq = q == m ? std::move(f) : source->field(t - delta + q * d);
          for (std::size_t k = 0; k < duhamel.values.size(); ++k) {
            duhamel.values[k] += 0.5 * d * fq.values[k];
          }
          f_prev = std::move(fq);
        }
      } else {
        f_prev = std::move(f);
      }
      const PlanarField rebuilt = difference(truncated, duhamel);
      run.duhamel_defect.push_back(std::sqrt(difference(rebuilt, ref).norm_sq()) / v0_norm);
    }
  };
  BoundaryMonitor mon = setup.monitor;
  run.result = evolve(setup.H, w0, T, cfg.stepper, {obs}, mon);
  return run;
}

}  // namespace

TransmissionReport transmission_experiment(const PacketSpec& spec, const ScatteringConfig& cfg) {
  spec.validate();
  cfg.validate();
  require_resolution(spec, cfg);
  const double carrier = cfg.carrier_for(spec);
  const ScatteringSetup setup(cfg, carrier);
  const int low = 0;
  const int upp = setup.grid.covering().monodromy(low, 1);

  const CutoffField chi = build_cutoff(setup.plane, spec.k);
  const PlanarField v0 = truncated_with(spec, chi, 0.0, carrier);
  WaveField w0 = lift_to_cover(v0, setup.grid, low);
  if (setup.H.is_metric()) w0 = to_flat(setup.H, w0);

  TransmissionReport rep;
  rep.spec = spec;
  rep.carrier = carrier;
  rep.h = cfg.h;
  rep.dt = std::abs(cfg.stepper.dt);
  rep.T = cfg.T;
  rep.w0_norm = w0.norm();
  {
    const ChannelMasses m0 = channel_masses(w0, cfg.r_far);
    rep.initial_upper_fraction = sheet_mass_fraction(m0, upp);
  }

  DirectionalRun fwd = run_direction(setup, spec, cfg, v0, chi, w0, cfg.T, upp);
  std::optional<DirectionalRun> bwd;
  if (cfg.run_backward) bwd.emplace(run_direction(setup, spec, cfg, v0, chi, w0, -cfg.T, low));
  const double nan = std::numeric_limits<double>::quiet_NaN();

  rep.times_forward = fwd.times;
  rep.residual_forward = fwd.residual;
  rep.truncated_residual_forward = fwd.truncated_residual;
  rep.duhamel_defect = fwd.duhamel_defect;
  rep.t0_forward = window_start(fwd.times, fwd.residual, spec.eps);
  // The window must cover at least the second half of the run.
  rep.window_forward = std::isfinite(rep.t0_forward) && rep.t0_forward <= 0.5 * cfg.T + 1e-12;

  const ChannelMasses mf = channel_masses(fwd.result.final_state, cfg.r_far);
  const double n0 = rep.w0_norm * rep.w0_norm;
  rep.projection.forward_upper = std::sqrt(mf.total[upp] / n0);
  rep.projection.forward_lower = std::sqrt(mf.total[low] / n0);
  rep.far_fraction_upper = mf.far[upp] / mf.sum_total();
  rep.norm_drift = std::abs(fwd.result.final_norm / fwd.result.initial_norm - 1.0);
  rep.max_boundary_mass = fwd.result.max_boundary_mass;
  rep.max_pad_mass = fwd.max_pad_mass;
  rep.solver_iterations = fwd.result.total_iterations;
  rep.forward = std::move(fwd.series);

  rep.t0_backward = nan;
  rep.projection.backward_upper = rep.projection.backward_lower = nan;
  rep.far_fraction_lower_backward = nan;
  if (bwd) {
    rep.times_backward = bwd->times;
    rep.residual_backward = bwd->residual;
    rep.truncated_residual_backward = bwd->truncated_residual;
    rep.duhamel_defect.insert(rep.duhamel_defect.end(), bwd->duhamel_defect.begin(),
                              bwd->duhamel_defect.end());
    rep.t0_backward = window_start(bwd->times, bwd->residual, spec.eps);
    rep.window_backward = std::isfinite(rep.t0_backward) && rep.t0_backward <= 0.5 * cfg.T + 1e-12;
    const ChannelMasses mb = channel_masses(bwd->result.final_state, cfg.r_far);
    rep.projection.backward_upper = std::sqrt(mb.total[upp] / n0);
    rep.projection.backward_lower = std::sqrt(mb.total[low] / n0);
    rep.far_fraction_lower_backward = mb.far[low] / mb.sum_total();
    rep.norm_drift = std::max(rep.norm_drift,
                              std::abs(bwd->result.final_norm / bwd->result.initial_norm - 1.0));
    rep.max_boundary_mass = std::max(rep.max_boundary_mass, bwd->result.max_boundary_mass);
    rep.max_pad_mass = std::max(rep.max_pad_mass, bwd->max_pad_mass);
    rep.solver_iterations += bwd->result.total_iterations;
    rep.backward = std::move(bwd->series);
  }

  if (cfg.with_s_entry) {
    rep.s_entry = s_entry_estimate(setup, v0, upp, low, cfg.T, cfg.stepper);
  }
  return rep;
}

WaveField approx_wave_operator_minus(const ScatteringSetup& setup, const PlanarField& v0,
                                     int sheet, double T, const StepperConfig& stepper) {
  FreePropagator prop(setup.plane, setup.carrier);
  const WaveField incoming = setup.inject(prop.propagate(v0, -T), sheet);
  return evolve(setup.H, incoming, T, stepper, {}, setup.monitor).final_state;
}

namespace {

// exp(-i T H) of the wave-operator approximant: incoming packet from -T to T.
WaveField scatter_incoming(const ScatteringSetup& setup, const PlanarField& v0, int sheet, double T,
                           const StepperConfig& stepper) {
  const WaveField w = approx_wave_operator_minus(setup, v0, sheet, T, stepper);
  return evolve(setup.H, w, T, stepper, {}, setup.monitor).final_state;
}

}  // namespace

SEntryEstimate s_entry_estimate(const ScatteringSetup& setup, const PlanarField& v0, int out_sheet,
                                int in_sheet, double T, const StepperConfig& stepper) {
  const WaveField out = scatter_incoming(setup, v0, in_sheet, T, stepper);
  FreePropagator prop(setup.plane, setup.carrier);
  const PlanarField ref = prop.propagate(v0, T);
  SEntryEstimate e;
  e.out_sheet = out_sheet;
  e.in_sheet = in_sheet;
  e.overlap = setup.overlap(out, ref, out_sheet);
  e.defect = std::abs(e.overlap - 1.0);
  e.v0_norm_sq = v0.norm_sq();
  return e;
}

SEntryEstimate s_entry_estimate(const PacketSpec& spec, const ScatteringConfig& cfg, int out_sheet,
                                int in_sheet) {
  spec.validate();
  cfg.validate();
  require_resolution(spec, cfg);
  const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
  const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
  return s_entry_estimate(setup, v0, out_sheet, in_sheet, cfg.T, cfg.stepper);
}

TransmissionRow transmission_row(const ScatteringSetup& setup, const PlanarField& v0, int launch,
                                 double T, const StepperConfig& stepper) {
  const WaveField out = scatter_incoming(setup, v0, launch, T, stepper);
  const ChannelMasses m = channel_masses(out);
  const double tot = m.sum_total();
  TransmissionRow row;
  row.launch = launch;
  for (std::size_t s = 0; s < m.total.size(); ++s) {
    row.far_fraction.push_back(m.far[s] / tot);
    row.mass_fraction.push_back(m.total[s] / tot);
  }
  row.row_sum = std::accumulate(row.mass_fraction.begin(), row.mass_fraction.end(), 0.0);
  return row;
}

void check_cut_clearance(const PacketSpec& spec) {
  const double reach = ConeCutoff::kHalfWidth + std::sqrt(2.0) / 4.0;
  if (std::abs(spec.k) - reach <= 1.0 + kSameSheetMargin) {
    throw Error(ErrorKind::CutOverlap, "cutoff support around x = " + std::to_string(spec.k) +
                                           " reaches the cut; need |k| > " +
                                           std::to_string(1.0 + reach + kSameSheetMargin));
  }
}

SameSheetReport same_sheet_experiment(const PacketSpec& spec, const ScatteringConfig& cfg,
                                      int launch_sheet) {
  spec.validate();
  cfg.validate();
  check_cut_clearance(spec);
  require_resolution(spec, cfg);
  const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
  if (launch_sheet < 0 || launch_sheet >= setup.grid.num_sheets()) {
    throw Error(ErrorKind::InvalidConfig, "launch sheet out of range");
  }
  const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
  const WaveField w0 = setup.inject(v0, launch_sheet);

  SameSheetReport rep;
  rep.spec = spec;
  rep.launch_sheet = launch_sheet;
  Observer obs;
  obs.stride = cfg.stride;
  obs.callback = [&](int, double t, const WaveField& psi) {
    rep.series.push(t, channel_masses(psi, cfg.r_far));
  };
  const EvolveResult res = evolve(setup.H, w0, cfg.T, cfg.stepper, {obs}, setup.monitor);
  rep.final_masses = channel_masses(res.final_state, cfg.r_far);
  rep.same_sheet_fraction = rep.final_masses.far[launch_sheet] / rep.final_masses.sum_far();
  FreePropagator prop(setup.plane, setup.carrier);
  rep.residual = setup.distance(res.final_state, prop.propagate(v0, cfg.T), launch_sheet) / w0.norm();
  return rep;
}

ProjectionMasses projection_masses(const ScatteringSetup& setup, const WaveField& w0_flat, double T,
                                   const StepperConfig& stepper, int lower_sheet, int upper_sheet) {
  const double n0 = w0_flat.norm_sq();
  const ChannelMasses mf = channel_masses(evolve(setup.H, w0_flat, T, stepper, {}, setup.monitor).final_state);
  const ChannelMasses mb = channel_masses(evolve(setup.H, w0_flat, -T, stepper, {}, setup.monitor).final_state);
  ProjectionMasses p;
  p.forward_upper = std::sqrt(mf.total[upper_sheet] / n0);
  p.forward_lower = std::sqrt(mf.total[lower_sheet] / n0);
  p.backward_upper = std::sqrt(mb.total[upper_sheet] / n0);
  p.backward_lower = std::sqrt(mb.total[lower_sheet] / n0);
  return p;
}

MultiSheetSurvey multi_sheet_survey(int num_sheets, const PacketSpec& spec,
                                    const ScatteringConfig& cfg, std::vector<int> launch_sheets,
                                    bool with_noise_floor) {
  spec.validate();
  ScatteringConfig c = cfg;
  c.num_sheets = num_sheets;
  c.cut_mode = CutMode::Coupled;
  c.validate();
  require_resolution(spec, c);
  if (launch_sheets.empty()) {
    launch_sheets.resize(num_sheets);
    std::iota(launch_sheets.begin(), launch_sheets.end(), 0);
  }
  MultiSheetSurvey out;
  out.num_sheets = num_sheets;
  {
    const ScatteringSetup setup(c, c.carrier_for(spec));
    const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
    for (int L : launch_sheets) {
      if (L < 0 || L >= num_sheets) throw Error(ErrorKind::InvalidConfig, "launch sheet out of range");
      out.rows.push_back(transmission_row(setup, v0, L, c.T, c.stepper));
    }
  }
  if (with_noise_floor) {
    ScatteringConfig d = c;
    d.num_sheets = 2;
    d.cut_mode = CutMode::Decoupled;
    {
      const ScatteringSetup setup(d, d.carrier_for(spec));
      const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
      out.decoupled_floor = transmission_row(setup, v0, 0, d.T, d.stepper).far_fraction[1];
    }
    d.cut_mode = CutMode::Coupled;
    PacketSpec shifted = spec;
    shifted.k = 3.0;
    // Keep the lateral margin of the unshifted runs.
    d.box.x_max += shifted.k + 1.0;
    {
      const ScatteringSetup setup(d, d.carrier_for(shifted));
      const PlanarField v0 = truncated_packet(shifted, setup.plane, 0.0, setup.carrier);
      out.shifted_floor = transmission_row(setup, v0, 0, d.T, d.stepper).far_fraction[1];
    }
    out.noise_floor = std::max(out.decoupled_floor, out.shifted_floor);
  }
  return out;
}

}  // namespace branchwave
