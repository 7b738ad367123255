#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "echolab/common.hpp"
#include "echolab/nn/tensor.hpp"
#include "echolab/wave.hpp"

namespace echolab {

// Analysis framing fixed project-wide: 20 ms Hamming window, 10 ms hop,
// FFT size equal to the window (no intra-frame zero padding).
struct StftConfig {
  int win_ms = 20;
  int hop_ms = 10;
  int fs = kSampleRate;

  int win_samples() const { return fs * win_ms / 1000; }   // 320
  int hop_samples() const { return fs * hop_ms / 1000; }   // 160
  int fft_size() const { return win_samples(); }
  int num_bins() const { return fft_size() / 2 + 1; }      // 161

  // Frame t covers samples [t*hop, t*hop + win); tail-only zero padding.
  int num_frames(std::size_t num_samples) const {
    const int n = static_cast<int>(num_samples);
    const int win = win_samples(), hop = hop_samples();
    if (n <= win) return 1;
    return (n - win + hop - 1) / hop + 1;
  }

  bool operator==(const StftConfig&) const = default;
};

std::vector<double> hamming_window(int n);

// Complex spectrogram, channels x T x F, nonnegative bins only.
struct SpectroTensor {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  std::size_t source_samples = 0;  // original wave length, used by istft
  StftConfig config;
  std::vector<std::complex<double>> data;  // [ch][t][f]

  SpectroTensor() = default;
  SpectroTensor(int c, int t, int f) : channels(c), frames(t), bins(f) {
    data.assign(static_cast<std::size_t>(c) * t * f, {0.0, 0.0});
  }

  std::complex<double>& at(int c, int t, int f) {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  const std::complex<double>& at(int c, int t, int f) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
};

SpectroTensor stft(const std::vector<double>& mono, const StftConfig& config);
SpectroTensor stft(const MultichannelWave& wave, const StftConfig& config);

// Weighted overlap-add with the Hamming analysis window divided by the
// per-sample COLA denominator; exact reconstruction where frames overlap.
// target_samples = 0 reproduces the stored source length.
std::vector<double> istft(const SpectroTensor& spec, const StftConfig& config,
                          std::size_t target_samples = 0);
MultichannelWave istft_multi(const SpectroTensor& spec, const StftConfig& config,
                             std::size_t target_samples = 0);

// Stacks RI components channel-interleaved: [Re(ch1), Im(ch1), Re(ch2), ...].
// Q mics + far end therefore yields (2Q+2) x T x F.
nn::Tensor<float> ri_pack(const std::vector<const SpectroTensor*>& tensors);
SpectroTensor ri_unpack(const nn::Tensor<float>& packed, const StftConfig& config);

}  // namespace echolab
