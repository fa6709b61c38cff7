#pragma once

#include <memory>
#include <mutex>

#include "branchwave/field.hpp"

namespace branchwave {

// Guards FFTW planner calls, which are not thread-safe.
std::mutex& fft_planner_mutex();

// Continuum free evolution exp(-i t A0) of planar envelopes by FFT on a
// zero-padded copy of the sampling grid. Envelopes carry the plane wave
// exp(i carrier y), so the multiplier is exp(-i t (kx^2 + ky^2 + 2 carrier ky)).
// Not safe for concurrent use of one instance.
class FreePropagator {
 public:
  FreePropagator(const PlanarGrid& grid, double carrier = 0.0, int pad = 2);
  ~FreePropagator();
  FreePropagator(const FreePropagator&) = delete;
  FreePropagator& operator=(const FreePropagator&) = delete;

  const PlanarGrid& grid() const { return grid_; }
  double carrier() const { return carrier_; }

  PlanarField propagate(const PlanarField& v, double t);
  // Squared norm that landed in the padding during the last propagate call.
  double last_pad_mass() const { return last_pad_mass_; }

 private:
  struct Plans;
  PlanarGrid grid_;
  double carrier_;
  int px_, py_;
  std::unique_ptr<Plans> plans_;
  double last_pad_mass_ = 0.0;
};

}  // namespace branchwave
