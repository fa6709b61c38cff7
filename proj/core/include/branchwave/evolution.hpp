#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "branchwave/field.hpp"
#include "branchwave/geometry.hpp"
#include "branchwave/parallel.hpp"

namespace branchwave {

// Compressed-row Hermitian matrix. Real and imaginary parts are stored
// separately so purely real operators skip the complex multiply.
class SparseHermitian {
 public:
  struct Triplet {
    std::int64_t row, col;
    cplx value;
  };

  SparseHermitian() = default;
  // Duplicate entries are summed; entries with |value| == 0 are kept only on the diagonal.
  static SparseHermitian from_triplets(std::size_t n, std::vector<Triplet> triplets);

  std::size_t rows() const { return rows_; }
  std::size_t nonzeros() const { return col_.size(); }
  bool is_real() const { return real_; }
  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int32_t>& cols() const { return col_; }
  const std::vector<double>& re() const { return re_; }
  const std::vector<double>& im() const { return im_; }

  cplx entry(std::size_t r, std::size_t c) const;
  void apply(const cvec& x, cvec& y) const;
  // <x, A x>, real for Hermitian A.
  double quadratic_form(const cvec& x) const;
  // Largest deviation |A_rc - conj(A_cr)|.
  double hermitian_defect() const;
  // Gershgorin bound on the spectral radius.
  double gershgorin_bound() const;

 private:
  std::size_t rows_ = 0;
  bool real_ = true;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_;
  std::vector<double> re_, im_;
};

// Metric coefficients (covariant g_ij) at a point of the covering.
struct MetricTensor {
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;
  double det() const { return g11 * g22 - g12 * g12; }
};
using MetricSampler = std::function<MetricTensor(double x, double y, int sheet)>;

// Discrete Hamiltonian acting on envelopes phi with psi = exp(i carrier y) phi.
// For metric operators the matrix is W^{-1/2} A W^{-1/2} with W = sqrt(det g)
// at nodes, so states live in the flat inner product; `weights` holds W.
struct DiscreteHamiltonian {
  const BranchedGrid* grid = nullptr;
  SparseHermitian op;
  std::vector<double> weights;  // empty for the Euclidean operator
  double carrier = 0.0;
  // Physical energy = <op phi, phi> / |phi|^2 + energy_offset.
  double energy_offset = 0.0;

  bool is_metric() const { return !weights.empty(); }
  // h^2 <op phi, phi>
  double energy(const WaveField& phi) const;
};

DiscreteHamiltonian assemble_euclidean(const BranchedGrid& grid, double carrier = 0.0);
DiscreteHamiltonian assemble_metric(const BranchedGrid& grid, const MetricSampler& metric,
                                    double carrier = 0.0);

// Map a coordinate-space state psi to the flat state W^{1/2} psi and back.
WaveField to_flat(const DiscreteHamiltonian& H, const WaveField& psi);
WaveField from_flat(const DiscreteHamiltonian& H, const WaveField& phi);

struct StepperConfig {
  double dt = 0.002;
  double solver_tol = 1e-10;
  int max_iter = 400;

  void validate() const;
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;  // true relative residual of the Cayley system
};

// Crank-Nicolson (Cayley) stepping: (I + i dt/2 H) psi+ = (I - i dt/2 H) psi,
// solved by a short-recurrence Lanczos (Galerkin) method on H.
class CrankNicolson {
 public:
  CrankNicolson(const DiscreteHamiltonian& H, StepperConfig cfg);

  const StepperConfig& config() const { return cfg_; }
  // Gershgorin bound of H; dt times it is the per-step phase at the top of the spectrum.
  double spectral_bound() const { return spectral_bound_; }
  // Per-step phase for a state of the given envelope energy; above 0.5 rad
  // the Cayley phase error becomes visible.
  double phase_per_step(double energy) const { return std::abs(cfg_.dt) * energy; }
  bool phase_warning(double energy) const { return phase_per_step(energy) > 0.5; }

  StepStats step(cvec& psi);
  // Solve (I + i c H) z = b for the given c.
  StepStats solve_shifted(double c, const cvec& b, cvec& z, double tol);

 private:
  const DiscreteHamiltonian* H_;
  StepperConfig cfg_;
  double spectral_bound_ = 0.0;
  cvec v_, v_prev_, w_, p_, r_, z_;
};

struct Observer {
  int stride = 1;
  std::function<void(int step, double t, const WaveField& psi)> callback;
};

struct BoundaryMonitor {
  double margin_fraction = 0.05;
  double threshold = 1e-4;
  bool throw_on_contamination = false;
};

// Squared mass within the outer margin_fraction of the box on every sheet.
double boundary_margin_mass(const WaveField& psi, double margin_fraction);

struct EvolveResult {
  WaveField final_state;
  int steps = 0;
  double max_boundary_mass = 0.0;
  bool contaminated = false;
  int total_iterations = 0;
  double max_residual = 0.0;
  double initial_norm = 0.0;
  double final_norm = 0.0;
};

// Advance psi0 by time T (negative T runs backwards with step -dt). T must be
// an integer multiple of dt. Observers also fire at step 0.
EvolveResult evolve(const DiscreteHamiltonian& H, const WaveField& psi0, double T,
                    const StepperConfig& cfg, const std::vector<Observer>& observers = {},
                    const BoundaryMonitor& monitor = {});

// Envelope to physical amplitude: exp(i carrier (y - carrier t)) phi.
WaveField envelope_to_physical(const WaveField& phi, double carrier, double t);
WaveField physical_to_envelope(const WaveField& psi, double carrier, double t);

// Binary snapshot: uint64 n_sheets, nx, ny; float64 h; then per sheet the
// row-major (j outer, i inner) complex values as (re, im) float64 pairs, all
// little-endian. Nodes absent from the grid are written as zero.
void write_snapshot(std::ostream& os, const WaveField& psi);
struct Snapshot {
  std::uint64_t n_sheets = 0, nx = 0, ny = 0;
  double h = 0.0;
  cvec values;
};
Snapshot read_snapshot(std::istream& is);
void write_snapshot_file(const std::string& path, const WaveField& psi);

}  // namespace branchwave
