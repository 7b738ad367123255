#pragma once

#include <complex>
#include <vector>

#include "echolab/dsp.hpp"
#include "echolab/fft.hpp"
#include "echolab/scenario.hpp"

namespace echolab {

// Frame-online MVDR beamformer: per frequency, the spatial covariance is
// tracked as R <- lambda R + (1-lambda) y y^H with diagonal loading, the
// weight solves R w ∝ d under the distortionless constraint w^H d = 1, and
// the steering vector is the far-field plane-wave model of the array.
class MvdrOnline {
 public:
  MvdrOnline(const ArraySpec& array, const StftConfig& cfg, double steer_direction_deg,
             double forget = 0.98);

  // Process one Q x F frame of mixture spectra, returns the beamformed F bins.
  std::vector<cdouble> step(const std::vector<std::vector<cdouble>>& frame);

  // Re-steer mid-stream (moving talker); covariance state persists.
  void set_direction(double steer_direction_deg);

  long fallback_count() const { return fallbacks_; }
  // Current weights for one bin (for constraint checks).
  const std::vector<cdouble>& weights(int bin) const { return w_[static_cast<std::size_t>(bin)]; }
  const std::vector<cdouble>& steering(int bin) const { return d_[static_cast<std::size_t>(bin)]; }

 private:
  void compute_steering(double direction_deg);

  ArraySpec array_;
  StftConfig cfg_;
  double forget_;
  int q_ = 0, bins_ = 0;
  std::vector<std::vector<cdouble>> r_;  // per bin, Q x Q row-major
  std::vector<std::vector<cdouble>> w_;  // per bin, Q
  std::vector<std::vector<cdouble>> d_;  // per bin, Q
  long fallbacks_ = 0;
};

// Batch convenience: beamform a whole Q x T x F spectrogram at a fixed look
// direction; returns a 1 x T x F spectrogram.
SpectroTensor mvdr_online(const SpectroTensor& mixture, double steer_direction_deg,
                          const ArraySpec& array, double forget = 0.98);

// Same, with a per-frame look direction (degrees), for moving talkers.
SpectroTensor mvdr_online_tracked(const SpectroTensor& mixture,
                                  const std::vector<double>& direction_per_frame,
                                  const ArraySpec& array, double forget = 0.98);

}  // namespace echolab
