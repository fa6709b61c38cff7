#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "branchwave/evolution.hpp"
#include "branchwave/field.hpp"
#include "branchwave/geometry.hpp"
#include "branchwave/metricfield.hpp"
#include "branchwave/packets.hpp"

namespace branchwave {

inline constexpr double kFarFieldRadius = 4.0;

struct ChannelMasses {
  std::vector<double> total;  // per sheet, h^2 sum |psi|^2
  std::vector<double> far;    // per sheet, planar radius > r_far
  double boundary = 0.0;      // outer 5% margin, all sheets

  double sum_total() const;
  double sum_far() const;
};

ChannelMasses channel_masses(const WaveField& psi, double r_far = kFarFieldRadius);

struct ChannelMassSeries {
  std::vector<double> times;
  std::vector<ChannelMasses> samples;

  void push(double t, ChannelMasses m);
  // Columns t, sheet0_mass, ..., far0, ..., boundary.
  void write_csv(std::ostream& os) const;
};

// Experiment geometry and time stepping shared by all channel experiments.
struct ScatteringConfig {
  Box box{-8.0, 8.0, -12.0, 12.0};
  double h = 1.0 / 16.0;
  int num_sheets = 2;
  CutMode cut_mode = CutMode::Coupled;
  StepperConfig stepper{0.0015, 1e-10, 400};
  double T = 0.21;
  int stride = 10;                  // observer stride in steps
  double r_far = kFarFieldRadius;
  bool use_carrier = true;          // evolve envelopes around exp(i (s + 1/2) y)
  bool enforce_resolution = true;
  bool duhamel_check = true;
  int duhamel_substeps = 10;        // trapezoid steps per observer interval
  bool with_s_entry = true;
  bool run_backward = true;
  bool throw_on_contamination = true;
  std::optional<SurfaceFunction> metric;

  void validate() const;
  double carrier_for(const PacketSpec& spec) const { return use_carrier ? spec.s + 0.5 : 0.0; }
  int steps() const;
};

// Largest momentum the discretization has to carry and the matching limits
// k_max h <= pi/2 and dt <= h / (4 k_max). With the carrier removed only the
// envelope band counts.
struct ResolutionCheck {
  double k_max = 0.0;
  double h_limit = 0.0;
  double dt_limit = 0.0;
  bool ok = false;
};
ResolutionCheck resolution_check(const PacketSpec& spec, const ScatteringConfig& cfg);

// Grid, Hamiltonian and planar sampling grid of one experiment. The
// Hamiltonian points into the grid, so the setup stays in place.
struct ScatteringSetup {
  ScatteringSetup(const ScatteringConfig& cfg, double carrier);
  ScatteringSetup(const ScatteringSetup&) = delete;
  ScatteringSetup& operator=(const ScatteringSetup&) = delete;

  // Flat state of J_sheet v for a planar envelope v.
  WaveField inject(const PlanarField& v, int sheet) const;
  // ||psi - J_sheet v|| and < P_sheet psi, J_sheet v > for a flat state psi.
  double distance(const WaveField& psi, const PlanarField& v, int sheet) const;
  cplx overlap(const WaveField& psi, const PlanarField& v, int sheet) const;

  BranchedGrid grid;
  DiscreteHamiltonian H;
  PlanarGrid plane;
  double carrier = 0.0;
  BoundaryMonitor monitor;
};

struct ProjectionMasses {
  double forward_upper = 0.0, forward_lower = 0.0;    // ||P_{+,sheet} w0|| / ||w0||
  double backward_upper = 0.0, backward_lower = 0.0;  // ||P_{-,sheet} w0|| / ||w0||
};

struct SEntryEstimate {
  int out_sheet = 0, in_sheet = 0;
  cplx overlap;
  double defect = 0.0;   // |overlap - 1|
  double v0_norm_sq = 0.0;
};

struct TransmissionReport {
  PacketSpec spec;
  double carrier = 0.0;
  double h = 0.0, dt = 0.0, T = 0.0;
  double w0_norm = 0.0;
  double initial_upper_fraction = 0.0;  // squared mass of w0 on the upper sheet

  // Forward samples t >= 0 against J_upp exp(-i t A0) v0, backward t <= 0 against J_low.
  // Backward fields stay empty or NaN when the backward run is switched off.
  std::vector<double> times_forward, residual_forward, truncated_residual_forward;
  std::vector<double> times_backward, residual_backward, truncated_residual_backward;
  std::vector<double> duhamel_defect;  // |Duhamel reconstruction - FFT reference| / |v0|
  double t0_forward = 0.0, t0_backward = 0.0;  // earliest sampled |t| from which residual < eps
  bool window_forward = false, window_backward = false;

  ChannelMassSeries forward, backward;
  ProjectionMasses projection;
  double far_fraction_upper = 0.0;          // forward, far mass on upper sheet / total
  double far_fraction_lower_backward = 0.0;
  double norm_drift = 0.0;                  // max relative norm change
  double max_boundary_mass = 0.0;
  double max_pad_mass = 0.0;
  int solver_iterations = 0;
  std::optional<SEntryEstimate> s_entry;  // upper out, lower in
};

// Smallest sampled |t| such that every later sample is below eps (NaN if none).
double window_start(const std::vector<double>& times, const std::vector<double>& residuals,
                    double eps);

TransmissionReport transmission_experiment(const PacketSpec& spec, const ScatteringConfig& cfg);

// exp(i T H) J_sheet exp(-i T A0) v0 with v0 an envelope on setup.plane; the
// result is a flat state of setup.H.
WaveField approx_wave_operator_minus(const ScatteringSetup& setup, const PlanarField& v0,
                                     int sheet, double T, const StepperConfig& stepper);

// < P_i exp(-i T H) W_-^T(j) v0, J_i exp(-i T A0) v0 >.
SEntryEstimate s_entry_estimate(const ScatteringSetup& setup, const PlanarField& v0, int out_sheet,
                                int in_sheet, double T, const StepperConfig& stepper);
SEntryEstimate s_entry_estimate(const PacketSpec& spec, const ScatteringConfig& cfg, int out_sheet,
                                int in_sheet);

// Far-field mass per sheet after an incoming packet injected on `launch`
// evolves from -T to T, normalized by the total mass.
struct TransmissionRow {
  int launch = 0;
  std::vector<double> far_fraction;
  std::vector<double> mass_fraction;
  double row_sum = 0.0;  // sum of mass_fraction
};
TransmissionRow transmission_row(const ScatteringSetup& setup, const PlanarField& v0, int launch,
                                 double T, const StepperConfig& stepper);

struct SameSheetReport {
  PacketSpec spec;
  int launch_sheet = 0;
  ChannelMasses final_masses;
  double same_sheet_fraction = 0.0;  // far mass on the launch sheet / total far mass
  double residual = 0.0;             // vs J_launch exp(-i T A0) v0 at T
  ChannelMassSeries series;
};

// Launch margin from the cut: supp chi reaches 1/2 + sqrt(2)/4 around x = k on y = 0.
inline constexpr double kSameSheetMargin = 0.05;
void check_cut_clearance(const PacketSpec& spec);

SameSheetReport same_sheet_experiment(const PacketSpec& spec, const ScatteringConfig& cfg,
                                      int launch_sheet = 0);

ProjectionMasses projection_masses(const ScatteringSetup& setup, const WaveField& w0_flat, double T,
                                   const StepperConfig& stepper, int lower_sheet, int upper_sheet);

struct MultiSheetSurvey {
  int num_sheets = 0;
  std::vector<TransmissionRow> rows;  // one per launch sheet
  double noise_floor = 0.0;           // off-sheet fraction of the n = 2 controls
  double decoupled_floor = 0.0;
  double shifted_floor = 0.0;
};

// Rows for the given launch sheets (all when empty); the noise floor comes
// from a decoupled n = 2 run and a shifted packet on the coupled n = 2 cover.
MultiSheetSurvey multi_sheet_survey(int num_sheets, const PacketSpec& spec,
                                    const ScatteringConfig& cfg, std::vector<int> launch_sheets = {},
                                    bool with_noise_floor = true);

}  // namespace branchwave
