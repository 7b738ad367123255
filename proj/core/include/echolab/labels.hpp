#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echolab/dsp.hpp"
#include "echolab/nn/tensor.hpp"
#include "echolab/scenario.hpp"

namespace echolab {

// Frame-level DOA ground truth on the 36-direction grid. Presence is stored
// as one byte per (frame, direction); the [1,0]/[0,1] pair encoding expected
// by the classifier heads is materialized by the *_targets() helpers.
struct DoaLabelTrack {
  StftConfig config;
  int frames = 0;
  std::vector<std::uint8_t> loudspeakers;  // frames x 36, 1 = present
  std::vector<std::uint8_t> talker;        // frames x 36

  bool ls_present(int t, int d) const {
    return loudspeakers[static_cast<std::size_t>(t) * kNumDirections +
                        static_cast<std::size_t>(d)] != 0;
  }
  bool talker_present(int t, int d) const {
    return talker[static_cast<std::size_t>(t) * kNumDirections + static_cast<std::size_t>(d)] !=
           0;
  }

  nn::Tensor<float> loudspeaker_targets() const;  // frames x 36 x 2
  nn::Tensor<float> talker_targets() const;
};

// Dry (pre-room) source signals, one per loudspeaker plus the talker.
struct DrySources {
  std::vector<std::vector<double>> loudspeakers;
  std::vector<double> talker;
};

DoaLabelTrack make_labels(const Scenario& scn, const DrySources& dry,
                          const StftConfig& config = {});

// Per-frame active direction sets from raw head logits (frames x 36 x 2,
// channel 0 = present). Softmax per direction, threshold on p(present), keep
// at most max_sources directions (ties toward the lower index).
std::vector<std::vector<int>> decode_predictions(const nn::Tensor<float>& logits, int max_sources,
                                                 double threshold = 0.5);

void save_labels(const std::string& path, const DoaLabelTrack& track);
DoaLabelTrack load_labels(const std::string& path);
std::string labels_summary_json(const DoaLabelTrack& track);

}  // namespace echolab
