#include "echolab/dsp.hpp"

#include <cmath>

#include "echolab/fft.hpp"

namespace echolab {

std::vector<double> hamming_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(6.283185307179586 * i / (n - 1));
  return w;
}

SpectroTensor stft(const std::vector<double>& mono, const StftConfig& config) {
  MultichannelWave w(1, 0);
  w.channels[0] = mono;
  return stft(w, config);
}

SpectroTensor stft(const MultichannelWave& wave, const StftConfig& config) {
  wave.check_consistent();
  require(wave.num_samples() > 0, "stft: empty wave");
  require(wave.sample_rate == config.fs, "stft: sample rate mismatch");
  const int win = config.win_samples();
  const int hop = config.hop_samples();
  const int num_frames = config.num_frames(wave.num_samples());
  const int bins = config.num_bins();
  const std::vector<double> window = hamming_window(win);

  SpectroTensor out(static_cast<int>(wave.num_channels()), num_frames, bins);
  out.config = config;
  out.source_samples = wave.num_samples();

  std::vector<double> frame(static_cast<std::size_t>(win));
  for (int c = 0; c < out.channels; ++c) {
    const std::vector<double>& x = wave.channels[static_cast<std::size_t>(c)];
    for (int t = 0; t < num_frames; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * hop;
      for (int i = 0; i < win; ++i) {
        const std::size_t n = start + static_cast<std::size_t>(i);
        frame[static_cast<std::size_t>(i)] = n < x.size() ? x[n] * window[static_cast<std::size_t>(i)] : 0.0;
      }
      std::vector<cdouble> spec = rfft(frame);
      for (int f = 0; f < bins; ++f) out.at(c, t, f) = spec[static_cast<std::size_t>(f)];
    }
  }
  return out;
}

MultichannelWave istft_multi(const SpectroTensor& spec, const StftConfig& config,
                             std::size_t target_samples) {
  require(spec.config == config, "istft: config mismatch");
  require(spec.frames > 0 && spec.bins == config.num_bins(), "istft: malformed tensor");
  const int win = config.win_samples();
  const int hop = config.hop_samples();
  const std::size_t full = static_cast<std::size_t>(spec.frames - 1) * hop + win;
  std::size_t want = target_samples ? target_samples
                                    : (spec.source_samples ? spec.source_samples : full);
  require(want <= full, "istft: target length exceeds frame coverage");

  const std::vector<double> window = hamming_window(win);
  std::vector<double> denom(full, 0.0);
  for (int t = 0; t < spec.frames; ++t)
    for (int i = 0; i < win; ++i)
      denom[static_cast<std::size_t>(t) * hop + i] += window[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];

  MultichannelWave out(static_cast<std::size_t>(spec.channels), want);
  out.sample_rate = config.fs;
  std::vector<cdouble> bins_buf(static_cast<std::size_t>(spec.bins));
  for (int c = 0; c < spec.channels; ++c) {
    std::vector<double> acc(full, 0.0);
    for (int t = 0; t < spec.frames; ++t) {
      for (int f = 0; f < spec.bins; ++f) bins_buf[static_cast<std::size_t>(f)] = spec.at(c, t, f);
      std::vector<double> frame = irfft(bins_buf, static_cast<std::size_t>(win));
      const std::size_t start = static_cast<std::size_t>(t) * hop;
      for (int i = 0; i < win; ++i)
        acc[start + static_cast<std::size_t>(i)] += frame[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
    }
    for (std::size_t n = 0; n < want; ++n)
      out.channels[static_cast<std::size_t>(c)][n] = acc[n] / denom[n];
  }
  return out;
}

std::vector<double> istft(const SpectroTensor& spec, const StftConfig& config,
                          std::size_t target_samples) {
  require(spec.channels == 1, "istft: expected mono tensor");
  return istft_multi(spec, config, target_samples).channels[0];
}

nn::Tensor<float> ri_pack(const std::vector<const SpectroTensor*>& tensors) {
  require(!tensors.empty(), "ri_pack: no tensors");
  const int t_frames = tensors[0]->frames;
  const int bins = tensors[0]->bins;
  int total_ch = 0;
  for (const SpectroTensor* s : tensors) {
    require(s->frames == t_frames && s->bins == bins, "ri_pack: (T,F) mismatch");
    total_ch += s->channels;
  }
  nn::Tensor<float> out({2 * total_ch, t_frames, bins});
  int plane = 0;
  for (const SpectroTensor* s : tensors) {
    for (int c = 0; c < s->channels; ++c) {
      for (int t = 0; t < t_frames; ++t) {
        for (int f = 0; f < bins; ++f) {
          const std::complex<double>& v = s->at(c, t, f);
          out.at(plane, t, f) = static_cast<float>(v.real());
          out.at(plane + 1, t, f) = static_cast<float>(v.imag());
        }
      }
      plane += 2;
    }
  }
  return out;
}

SpectroTensor ri_unpack(const nn::Tensor<float>& packed, const StftConfig& config) {
  require(packed.rank() == 3 && packed.dim(0) % 2 == 0, "ri_unpack: need even channel count");
  SpectroTensor out(packed.dim(0) / 2, packed.dim(1), packed.dim(2));
  out.config = config;
  for (int c = 0; c < out.channels; ++c)
    for (int t = 0; t < out.frames; ++t)
      for (int f = 0; f < out.bins; ++f)
        out.at(c, t, f) = {static_cast<double>(packed.at(2 * c, t, f)),
                           static_cast<double>(packed.at(2 * c + 1, t, f))};
  return out;
}

}  // namespace echolab
