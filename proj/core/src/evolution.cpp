#include "branchwave/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "branchwave/errors.hpp"

namespace branchwave {

// ---------------------------------------------------------------------------
// Sparse storage

SparseHermitian SparseHermitian::from_triplets(std::size_t n, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseHermitian m;
  m.rows_ = n;
  m.row_ptr_.assign(n + 1, 0);
  std::size_t k = 0;
  for (std::size_t r = 0; r < n; ++r) {
    m.row_ptr_[r] = static_cast<std::int64_t>(m.col_.size());
    while (k < t.size() && t[k].row == static_cast<std::int64_t>(r)) {
      const std::int64_t c = t[k].col;
      cplx acc(0.0, 0.0);
      while (k < t.size() && t[k].row == static_cast<std::int64_t>(r) && t[k].col == c) {
        acc += t[k].value;
        ++k;
      }
      if (acc == cplx(0.0, 0.0) && c != static_cast<std::int64_t>(r)) continue;
      m.col_.push_back(static_cast<std::int32_t>(c));
      m.re_.push_back(acc.real());
      m.im_.push_back(acc.imag());
      if (acc.imag() != 0.0) m.real_ = false;
    }
  }
  m.row_ptr_[n] = static_cast<std::int64_t>(m.col_.size());
  if (m.real_) m.im_.clear();
  return m;
}

cplx SparseHermitian::entry(std::size_t r, std::size_t c) const {
  for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
    if (col_[k] == static_cast<std::int32_t>(c)) return {re_[k], real_ ? 0.0 : im_[k]};
  }
  return {0.0, 0.0};
}

void SparseHermitian::apply(const cvec& x, cvec& y) const {
  y.resize(rows_);
  const long long n = static_cast<long long>(rows_);
  if (real_) {
#pragma omp parallel for schedule(static) if (n > 32768)
    for (long long r = 0; r < n; ++r) {
      double ar = 0.0, ai = 0.0;
      for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        const cplx v = x[col_[k]];
        ar += re_[k] * v.real();
        ai += re_[k] * v.imag();
      }
      y[r] = cplx(ar, ai);
    }
    return;
  }
#pragma omp parallel for schedule(static) if (n > 32768)
  for (long long r = 0; r < n; ++r) {
    double ar = 0.0, ai = 0.0;
    for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const cplx v = x[col_[k]];
      ar += re_[k] * v.real() - im_[k] * v.imag();
      ai += re_[k] * v.imag() + im_[k] * v.real();
    }
    y[r] = cplx(ar, ai);
  }
}

double SparseHermitian::quadratic_form(const cvec& x) const {
  cvec y;
  apply(x, y);
  return dot(x, y).real();
}

double SparseHermitian::hermitian_defect() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const cplx a(re_[k], real_ ? 0.0 : im_[k]);
      const cplx b = entry(static_cast<std::size_t>(col_[k]), r);
      worst = std::max(worst, std::abs(a - std::conj(b)));
    }
  }
  return worst;
}

double SparseHermitian::gershgorin_bound() const {
  double best = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      s += std::hypot(re_[k], real_ ? 0.0 : im_[k]);
    }
    best = std::max(best, s);
  }
  return best;
}

double DiscreteHamiltonian::energy(const WaveField& phi) const {
  const double h = grid->h();
  return h * h * op.quadratic_form(phi.values);
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

using Triplets = std::vector<SparseHermitian::Triplet>;

void add_edge(Triplets& t, std::int64_t u, std::int64_t v, double conductance, double inv_h2) {
  const double c = conductance * inv_h2;
  t.push_back({u, u, c});
  t.push_back({v, v, c});
  t.push_back({u, v, -c});
  t.push_back({v, u, -c});
}

// Skew part of the carrier term: -i carrier (div(b .) + b . grad) between u and v,
// with v the east or north neighbour of u.
void add_carrier(Triplets& t, std::int64_t u, std::int64_t v, double b_sum, double carrier,
                 double h) {
  const double k = carrier * b_sum / (2.0 * h);
  t.push_back({u, v, cplx(0.0, -k)});
  t.push_back({v, u, cplx(0.0, k)});
}

}  // namespace

DiscreteHamiltonian assemble_euclidean(const BranchedGrid& grid, double carrier) {
  const double h = grid.h(), inv_h2 = 1.0 / (h * h);
  Triplets t;
  t.reserve(grid.size() * 9);
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const auto& nd = grid.node(id);
    const auto u = static_cast<std::int64_t>(id);
    for (int d = 0; d < 4; ++d) {
      if (nd.nbr[d] < 0) t.push_back({u, u, inv_h2 / nd.wall[d]});
    }
    if (nd.nbr[East] >= 0) add_edge(t, u, nd.nbr[East], 1.0, inv_h2);
    if (nd.nbr[North] >= 0) {
      add_edge(t, u, nd.nbr[North], 1.0, inv_h2);
      if (carrier != 0.0) add_carrier(t, u, nd.nbr[North], 2.0, carrier, h);
    }
  }
  DiscreteHamiltonian H;
  H.grid = &grid;
  H.op = SparseHermitian::from_triplets(grid.size(), std::move(t));
  H.carrier = carrier;
  H.energy_offset = carrier * carrier;
  return H;
}

namespace {

struct Coefficients {
  double a11, a12, a22;  // g^{ij} sqrt(det g)
  double weight;         // sqrt(det g)
};

Coefficients coefficients(const MetricSampler& metric, double x, double y, int sheet) {
  const MetricTensor g = metric(x, y, sheet);
  const double det = g.det();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorKind::DegenerateMetric,
                "det g = " + std::to_string(det) + " at (" + std::to_string(x) + ", " +
                    std::to_string(y) + ")");
  }
  const double w = std::sqrt(det);
  return {g.g22 / w, -g.g12 / w, g.g11 / w, w};
}

}  // namespace

DiscreteHamiltonian assemble_metric(const BranchedGrid& grid, const MetricSampler& metric,
                                    double carrier) {
  const double h = grid.h(), inv_h2 = 1.0 / (h * h);
  const std::size_t n = grid.size();
  std::vector<Coefficients> at_node(n);
  for (std::size_t id = 0; id < n; ++id) {
    const auto& nd = grid.node(id);
    at_node[id] = coefficients(metric, nd.x, nd.y, nd.sheet);
  }

  Triplets t;
  t.reserve(n * 17);
  for (std::size_t id = 0; id < n; ++id) {
    const auto& nd = grid.node(id);
    const auto u = static_cast<std::int64_t>(id);
    const Coefficients& cu = at_node[id];

    // Horizontal and vertical edges; conductances at midpoints on the lower/left node's sheet.
    const double xe = nd.x + 0.5 * h, xw = nd.x - 0.5 * h;
    const double yn = nd.y + 0.5 * h, ys = nd.y - 0.5 * h;
    if (nd.nbr[East] >= 0) {
      const Coefficients m = coefficients(metric, xe, nd.y, nd.sheet);
      add_edge(t, u, nd.nbr[East], m.a11, inv_h2);
      if (carrier != 0.0) {
        add_carrier(t, u, nd.nbr[East], cu.a12 + at_node[nd.nbr[East]].a12, carrier, h);
      }
    } else {
      t.push_back({u, u, coefficients(metric, xe, nd.y, nd.sheet).a11 * inv_h2 / nd.wall[East]});
    }
    if (nd.nbr[West] < 0) {
      t.push_back({u, u, coefficients(metric, xw, nd.y, nd.sheet).a11 * inv_h2 / nd.wall[West]});
    }
    if (nd.nbr[North] >= 0) {
      const Coefficients m = coefficients(metric, nd.x, yn, nd.sheet);
      add_edge(t, u, nd.nbr[North], m.a22, inv_h2);
      if (carrier != 0.0) {
        add_carrier(t, u, nd.nbr[North], cu.a22 + at_node[nd.nbr[North]].a22, carrier, h);
      }
    } else {
      t.push_back({u, u, coefficients(metric, nd.x, yn, nd.sheet).a22 * inv_h2 / nd.wall[North]});
    }
    if (nd.nbr[South] < 0) {
      t.push_back({u, u, coefficients(metric, nd.x, ys, nd.sheet).a22 * inv_h2 / nd.wall[South]});
    }

    // Mixed term on the cell with lower-left corner u, split across both diagonals.
    const std::int64_t u10 = nd.nbr[East], u01 = nd.nbr[North];
    if (u10 >= 0 && u01 >= 0) {
      const std::int64_t u11 = grid.node(u10).nbr[North];
      if (u11 >= 0 && grid.node(u01).nbr[East] == u11) {
        const double a12 = coefficients(metric, xe, yn, nd.sheet).a12;
        if (a12 != 0.0) {
          add_edge(t, u, u11, 0.5 * a12, inv_h2);
          add_edge(t, u10, u01, -0.5 * a12, inv_h2);
        }
      }
    }

    if (carrier != 0.0) {
      t.push_back({u, u, carrier * carrier * (cu.a22 - cu.weight)});
    }
  }

  std::vector<double> inv_sqrt_w(n);
  for (std::size_t id = 0; id < n; ++id) inv_sqrt_w[id] = 1.0 / std::sqrt(at_node[id].weight);
  for (auto& e : t) e.value *= inv_sqrt_w[e.row] * inv_sqrt_w[e.col];

  DiscreteHamiltonian H;
  H.grid = &grid;
  H.op = SparseHermitian::from_triplets(n, std::move(t));
  H.weights.resize(n);
  for (std::size_t id = 0; id < n; ++id) H.weights[id] = at_node[id].weight;
  H.carrier = carrier;
  H.energy_offset = carrier * carrier;
  return H;
}

WaveField to_flat(const DiscreteHamiltonian& H, const WaveField& psi) {
  WaveField out = psi;
  if (!H.is_metric()) return out;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] *= std::sqrt(H.weights[k]);
  return out;
}

WaveField from_flat(const DiscreteHamiltonian& H, const WaveField& phi) {
  WaveField out = phi;
  if (!H.is_metric()) return out;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] /= std::sqrt(H.weights[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson

void StepperConfig::validate() const {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidConfig, "stepper.dt must be nonzero");
  if (!(solver_tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "stepper.tol must be positive");
  if (max_iter < 1) throw Error(ErrorKind::InvalidConfig, "stepper.max_iter must be positive");
}

CrankNicolson::CrankNicolson(const DiscreteHamiltonian& H, StepperConfig cfg) : H_(&H), cfg_(cfg) {
  cfg_.validate();
  spectral_bound_ = H.op.gershgorin_bound();
}

namespace {

constexpr std::size_t kBlock = kReductionBlock;

// w = B v - beta v_prev, returning (<v, w>, |w|^2) with fixed-order block sums.
std::pair<double, double> lanczos_apply(const SparseHermitian& B, const cvec& v, const cvec& v_prev,
                                        double beta, cvec& w) {
  const std::size_t n = B.rows();
  const auto& rp = B.row_ptr();
  const auto& col = B.cols();
  const auto& re = B.re();
  const auto& im = B.im();
  const bool real = B.is_real();
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> part_a(nb), part_w(nb);
#pragma omp parallel for schedule(static) if (nb > 8)
  for (long long b = 0; b < static_cast<long long>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    double sa = 0.0, sw = 0.0;
    for (std::size_t r = lo; r < hi; ++r) {
      double ar = 0.0, ai = 0.0;
      if (real) {
        for (std::int64_t k = rp[r]; k < rp[r + 1]; ++k) {
          const cplx x = v[col[k]];
          ar += re[k] * x.real();
          ai += re[k] * x.imag();
        }
      } else {
        for (std::int64_t k = rp[r]; k < rp[r + 1]; ++k) {
          const cplx x = v[col[k]];
          ar += re[k] * x.real() - im[k] * x.imag();
          ai += re[k] * x.imag() + im[k] * x.real();
        }
      }
      ar -= beta * v_prev[r].real();
      ai -= beta * v_prev[r].imag();
      w[r] = cplx(ar, ai);
      sa += v[r].real() * ar + v[r].imag() * ai;
      sw += ar * ar + ai * ai;
    }
    part_a[b] = sa;
    part_w[b] = sw;
  }
  double alpha = 0.0, wn = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    alpha += part_a[b];
    wn += part_w[b];
  }
  return {alpha, wn};
}

// r = b - (I + i c B) z, returning |r|^2.
double shifted_residual(const SparseHermitian& B, double c, const cvec& b, const cvec& z, cvec& r) {
  B.apply(z, r);
  const std::size_t n = r.size();
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> part(nb);
#pragma omp parallel for schedule(static) if (nb > 8)
  for (long long k = 0; k < static_cast<long long>(nb); ++k) {
    const std::size_t lo = static_cast<std::size_t>(k) * kBlock, hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const cplx bz = r[i];
      // b - z - i c (B z)
      const double rr = b[i].real() - z[i].real() + c * bz.imag();
      const double ri = b[i].imag() - z[i].imag() - c * bz.real();
      r[i] = cplx(rr, ri);
      s += rr * rr + ri * ri;
    }
    part[k] = s;
  }
  double acc = 0.0;
  for (double p : part) acc += p;
  return acc;
}

}  // namespace

StepStats CrankNicolson::solve_shifted(double c, const cvec& b, cvec& z, double tol) {
  const SparseHermitian& B = H_->op;
  const std::size_t n = B.rows();
  z.assign(n, cplx(0.0, 0.0));
  StepStats stats;
  const double b_norm = std::sqrt(norm_sq(b));
  if (b_norm == 0.0) return stats;
  const double target = tol * b_norm;
  const cplx ic(0.0, c);

  cvec rhs = b;
  for (int restart = 0; restart < 4; ++restart) {
    const double beta1 = std::sqrt(norm_sq(rhs));
    v_.resize(n);
    for (std::size_t i = 0; i < n; ++i) v_[i] = rhs[i] / beta1;
    v_prev_.assign(n, cplx(0.0, 0.0));
    p_.assign(n, cplx(0.0, 0.0));
    w_.resize(n);

    double beta_b = 0.0;  // off-diagonal of the Lanczos tridiagonal of B
    cplx eta(1.0, 0.0), zeta(beta1, 0.0);
    for (int m = 1;; ++m) {
      if (stats.iterations >= cfg_.max_iter) {
        throw Error(ErrorKind::SolverDiverged,
                    "Krylov solve exceeded " + std::to_string(cfg_.max_iter) + " iterations");
      }
      ++stats.iterations;
      const auto [alpha, w_sq] = lanczos_apply(B, v_, v_prev_, beta_b, w_);
      double next_beta_sq = w_sq - alpha * alpha;
      if (next_beta_sq < 1e-6 * w_sq) {
        // Cancellation guard: recompute |w - alpha v|^2 directly.
        next_beta_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) next_beta_sq += std::norm(w_[i] - alpha * v_[i]);
      }
      const double next_beta = std::sqrt(std::max(0.0, next_beta_sq));
      const cplx alpha_a = 1.0 + ic * alpha;
      cplx beta_a(0.0, 0.0);
      if (m == 1) {
        eta = alpha_a;
      } else {
        beta_a = ic * beta_b;
        const cplx lambda = beta_a / eta;
        eta = alpha_a - lambda * beta_a;
        zeta = -lambda * zeta;
      }
      const cplx coef = zeta / eta;
      const cplx inv_eta = 1.0 / eta;
      const double inv_next = next_beta > 0.0 ? 1.0 / next_beta : 0.0;
      const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (nn > 65536)
      for (long long i = 0; i < nn; ++i) {
        const cplx pv = (v_[i] - beta_a * p_[i]) * inv_eta;
        p_[i] = pv;
        z[i] += zeta * pv;
        w_[i] = (w_[i] - alpha * v_[i]) * inv_next;
      }
      std::swap(v_prev_, v_);
      std::swap(v_, w_);
      beta_b = next_beta;
      const double estimate = std::abs(c) * next_beta * std::abs(coef);
      if (estimate <= 0.5 * target || next_beta == 0.0) break;
    }

    const double r_sq = shifted_residual(B, c, b, z, r_);
    stats.residual = std::sqrt(r_sq) / b_norm;
    if (std::sqrt(r_sq) <= target) return stats;
    rhs.swap(r_);
  }
  throw Error(ErrorKind::SolverDiverged, "Krylov solve stagnated at relative residual " +
                                             std::to_string(stats.residual));
}

StepStats CrankNicolson::step(cvec& psi) {
  // psi+ = 2 (I + i dt/2 H)^{-1} psi - psi; the Cayley residual is twice the inner one.
  StepStats st = solve_shifted(0.5 * cfg_.dt, psi, z_, 0.5 * cfg_.solver_tol);
  const long long n = static_cast<long long>(psi.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (long long i = 0; i < n; ++i) psi[i] = 2.0 * z_[i] - psi[i];
  st.residual *= 2.0;
  return st;
}

// ---------------------------------------------------------------------------
// Time loop

double boundary_margin_mass(const WaveField& psi, double margin_fraction) {
  const BranchedGrid& g = *psi.grid;
  double acc = 0.0;
  if (g.is_disc()) {
    const double r_in = (1.0 - margin_fraction) * g.disc_radius();
    for (std::size_t id = 0; id < g.size(); ++id) {
      const auto& nd = g.node(id);
      if (std::hypot(nd.x, nd.y) > r_in) acc += std::norm(psi.values[id]);
    }
  } else {
    const Box b = g.box();
    const double mx = margin_fraction * (b.x_max - b.x_min);
    const double my = margin_fraction * (b.y_max - b.y_min);
    for (std::size_t id = 0; id < g.size(); ++id) {
      const auto& nd = g.node(id);
      if (nd.x < b.x_min + mx || nd.x > b.x_max - mx || nd.y < b.y_min + my || nd.y > b.y_max - my) {
        acc += std::norm(psi.values[id]);
      }
    }
  }
  return g.h() * g.h() * acc;
}

EvolveResult evolve(const DiscreteHamiltonian& H, const WaveField& psi0, double T,
                    const StepperConfig& cfg, const std::vector<Observer>& observers,
                    const BoundaryMonitor& monitor) {
  cfg.validate();
  if (psi0.grid != H.grid || psi0.values.size() != H.op.rows()) {
    throw Error(ErrorKind::GridMismatch, "initial state is not on the Hamiltonian's grid");
  }
  const double dt_abs = std::abs(cfg.dt);
  const double ratio = std::abs(T) / dt_abs;
  const long long steps = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw Error(ErrorKind::InvalidConfig, "evolution time must be an integer multiple of dt");
  }
  StepperConfig signed_cfg = cfg;
  signed_cfg.dt = (T < 0.0 ? -1.0 : 1.0) * dt_abs;
  CrankNicolson cn(H, signed_cfg);

  EvolveResult res;
  res.final_state = psi0;
  res.initial_norm = psi0.norm();
  auto observe = [&](long long k) {
    const double t = static_cast<double>(k) * signed_cfg.dt;
    for (const Observer& o : observers) {
      if (o.callback && o.stride > 0 && k % o.stride == 0) {
        o.callback(static_cast<int>(k), t, res.final_state);
      }
    }
  };
  auto check_boundary = [&]() {
    const double m = boundary_margin_mass(res.final_state, monitor.margin_fraction);
    res.max_boundary_mass = std::max(res.max_boundary_mass, m);
    if (m > monitor.threshold) {
      res.contaminated = true;
      if (monitor.throw_on_contamination) {
        throw Error(ErrorKind::BoundaryContamination,
                    "margin mass " + std::to_string(m) + " exceeds " + std::to_string(monitor.threshold));
      }
    }
  };

  observe(0);
  check_boundary();
  for (long long k = 1; k <= steps; ++k) {
    const StepStats st = cn.step(res.final_state.values);
    res.total_iterations += st.iterations;
    res.max_residual = std::max(res.max_residual, st.residual);
    if (k % 5 == 0 || k == steps) check_boundary();
    observe(k);
  }
  res.steps = static_cast<int>(steps);
  res.final_norm = res.final_state.norm();
  return res;
}

WaveField envelope_to_physical(const WaveField& phi, double carrier, double t) {
  WaveField out = phi;
  if (carrier == 0.0) return out;
  for (std::size_t id = 0; id < out.values.size(); ++id) {
    const double y = phi.grid->node(id).y;
    out.values[id] *= std::polar(1.0, carrier * (y - carrier * t));
  }
  return out;
}

WaveField physical_to_envelope(const WaveField& psi, double carrier, double t) {
  WaveField out = psi;
  if (carrier == 0.0) return out;
  for (std::size_t id = 0; id < out.values.size(); ++id) {
    const double y = psi.grid->node(id).y;
    out.values[id] *= std::polar(1.0, -carrier * (y - carrier * t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(bits >> (8 * k));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw Error(ErrorKind::Io, "truncated snapshot");
  }
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const WaveField& psi) {
  const BranchedGrid& g = *psi.grid;
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.num_sheets()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.nx()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.ny()));
  put_le<double>(os, g.h());
  for (int s = 0; s < g.num_sheets(); ++s) {
    for (int j = g.j_lo(); j < g.j_hi(); ++j) {
      for (int i = g.i_lo(); i < g.i_hi(); ++i) {
        const std::int64_t id = g.index(s, i, j);
        const cplx v = id >= 0 ? psi.values[static_cast<std::size_t>(id)] : cplx(0.0, 0.0);
        put_le<double>(os, v.real());
        put_le<double>(os, v.imag());
      }
    }
  }
}

Snapshot read_snapshot(std::istream& is) {
  Snapshot s;
  s.n_sheets = get_le<std::uint64_t>(is);
  s.nx = get_le<std::uint64_t>(is);
  s.ny = get_le<std::uint64_t>(is);
  s.h = get_le<double>(is);
  const std::uint64_t n = s.n_sheets * s.nx * s.ny;
  if (s.n_sheets > 64 || s.nx > (1u << 20) || s.ny > (1u << 20)) {
    throw Error(ErrorKind::Io, "implausible snapshot header");
  }
  s.values.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    s.values[k] = cplx(re, im);
  }
  return s;
}

void write_snapshot_file(const std::string& path, const WaveField& psi) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  write_snapshot(os, psi);
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace branchwave
