#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "echolab/common.hpp"

namespace echolab {

// Named roles for the signals of the mixture model.
enum class WaveRole {
  kMixture,         // y
  kEcho,            // e
  kNearEnd,         // s
  kNearEndDirect,   // s^d
  kNearEndReverb,   // s^r
  kFarEnd,          // x
  kFarEndNonlinear  // x^nl
};

std::string to_string(WaveRole role);

// Q-channel time-domain signal at 16 kHz. Samples are kept in double so the
// additive signal-model identities survive to ~1e-15; file I/O quantizes.
struct MultichannelWave {
  std::vector<std::vector<double>> channels;
  int sample_rate = kSampleRate;
  WaveRole role = WaveRole::kMixture;

  MultichannelWave() = default;
  MultichannelWave(std::size_t num_channels, std::size_t num_samples,
                   WaveRole r = WaveRole::kMixture)
      : channels(num_channels, std::vector<double>(num_samples, 0.0)), role(r) {}

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const { return channels.empty() ? 0 : channels[0].size(); }

  void check_consistent() const {
    for (const auto& c : channels)
      require(c.size() == num_samples(), "MultichannelWave: ragged channel lengths");
  }
};

inline double energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace echolab
