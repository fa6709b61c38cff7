#include "branchwave/free_propagator.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "branchwave/errors.hpp"

namespace branchwave {

std::mutex& fft_planner_mutex() {
  static std::mutex m;
  return m;
}

namespace {
double wavenumber(int m, int n, double h) {
  const int k = (m <= n / 2) ? m : m - n;
  return 2.0 * std::numbers::pi * k / (n * h);
}
}  // namespace

struct FreePropagator::Plans {
  fftw_complex* data = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

FreePropagator::FreePropagator(const PlanarGrid& grid, double carrier, int pad)
    : grid_(grid), carrier_(carrier), plans_(std::make_unique<Plans>()) {
  if (pad < 1 || grid.nx < 2 || grid.ny < 2) {
    throw Error(ErrorKind::InvalidConfig, "free propagator needs pad >= 1 and a 2D grid");
  }
  px_ = grid.nx * pad;
  py_ = grid.ny * pad;
  const std::size_t n = static_cast<std::size_t>(px_) * py_;
  std::lock_guard<std::mutex> lock(fft_planner_mutex());
  plans_->data = fftw_alloc_complex(n);
  plans_->forward =
      fftw_plan_dft_2d(py_, px_, plans_->data, plans_->data, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->backward =
      fftw_plan_dft_2d(py_, px_, plans_->data, plans_->data, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FreePropagator::~FreePropagator() {
  std::lock_guard<std::mutex> lock(fft_planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
  fftw_free(plans_->data);
}

PlanarField FreePropagator::propagate(const PlanarField& v, double t) {
  if (v.grid.nx != grid_.nx || v.grid.ny != grid_.ny || std::abs(v.grid.h - grid_.h) > 1e-12) {
    throw Error(ErrorKind::GridMismatch, "field does not match the propagator grid");
  }
  const std::size_t n = static_cast<std::size_t>(px_) * py_;
  auto* buf = reinterpret_cast<cplx*>(plans_->data);
  std::fill(buf, buf + n, cplx(0.0, 0.0));
  // The field occupies the centre block so the padding absorbs spreading on all sides.
  const int ox = (px_ - grid_.nx) / 2, oy = (py_ - grid_.ny) / 2;
  for (int j = 0; j < grid_.ny; ++j) {
    for (int i = 0; i < grid_.nx; ++i) {
      buf[static_cast<std::size_t>(j + oy) * px_ + (i + ox)] =
          v.values[static_cast<std::size_t>(j) * grid_.nx + i];
    }
  }
  fftw_execute(plans_->forward);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int j = 0; j < py_; ++j) {
    const double ky = wavenumber(j, py_, grid_.h);
    for (int i = 0; i < px_; ++i) {
      const double kx = wavenumber(i, px_, grid_.h);
      const double phase = -t * (kx * kx + ky * ky + 2.0 * carrier_ * ky);
      buf[static_cast<std::size_t>(j) * px_ + i] *= std::polar(inv_n, phase);
    }
  }
  fftw_execute(plans_->backward);

  PlanarField out{grid_, cvec(grid_.size())};
  double total = 0.0, inner = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += std::norm(buf[k]);
  for (int j = 0; j < grid_.ny; ++j) {
    for (int i = 0; i < grid_.nx; ++i) {
      const cplx z = buf[static_cast<std::size_t>(j + oy) * px_ + (i + ox)];
      out.values[static_cast<std::size_t>(j) * grid_.nx + i] = z;
      inner += std::norm(z);
    }
  }
  last_pad_mass_ = grid_.h * grid_.h * std::max(0.0, total - inner);
  return out;
}

}  // namespace branchwave
