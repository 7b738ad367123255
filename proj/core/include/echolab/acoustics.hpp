#pragma once

#include <vector>

#include "echolab/common.hpp"
#include "echolab/scenario.hpp"
#include "echolab/wave.hpp"

namespace echolab {

// Room impulse response between one source and one receiver.
struct Rir {
  std::vector<double> taps;
  int sample_rate = kSampleRate;
  Vec3 source{};
  Vec3 receiver{};
  double t60_s = 0.0;

  int first_nonzero_tap() const;
  double energy() const;
};

struct ImageMethodOptions {
  int max_order = 40;        // reflection images per axis
  bool use_sabine = false;   // default: Eyring absorption
  bool force_anechoic = false;  // zero reflection coefficients, direct path only
};

// Uniform wall reflection coefficient that realizes room.t60_s.
double reflection_coefficient(const RoomSpec& room, bool use_sabine = false);

Rir simulate_rir(const RoomSpec& room, const Vec3& source, const Vec3& receiver,
                 int fs = kSampleRate, const ImageMethodOptions& opt = {});

// Reverberation time via backward integration of the squared response,
// fitted on the -5..-25 dB stretch of the decay curve.
double schroeder_t60(const Rir& rir);

struct NonlinearityConfig {
  bool enabled = true;
  double clip_ratio = 0.8;
  double gain_pos = 4.0;
  double gain_neg = 0.5;
  double output_scale = 1.5;
};

// Memoryless loudspeaker distortion: hard clip at clip_ratio * peak, then an
// asymmetric sigmoid. Silent input comes back unchanged.
std::vector<double> loudspeaker_nonlinearity(const std::vector<double>& x,
                                             const NonlinearityConfig& cfg = {});

struct RenderOptions {
  ImageMethodOptions rir;
  NonlinearityConfig nonlinearity;
  double crossfade_s = 0.010;  // talker segment transition
};

struct RenderResult {
  MultichannelWave mixture;      // y
  MultichannelWave echo;         // sum over loudspeakers
  MultichannelWave near_end;     // s
  MultichannelWave near_direct;  // s^d
  MultichannelWave near_reverb;  // s^r = s - s^d
  std::vector<MultichannelWave> echo_per_speaker;
  std::vector<double> far_end_nl;
};

RenderResult render_mixture(const Scenario& scn, const std::vector<double>& far_end,
                            const std::vector<double>& near_speech,
                            const RenderOptions& opt = {});

// Signal-to-echo ratio in dB; +inf when the echo is silent.
double ser(const std::vector<double>& near, const std::vector<double>& echo);

}  // namespace echolab
