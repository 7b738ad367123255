// FFT kernels, STFT analysis/synthesis, RI packing and WAV file I/O.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>

#include "echolab/dsp.hpp"
#include "echolab/fft.hpp"
#include "echolab/rng.hpp"
#include "echolab/synth.hpp"
#include "echolab/wav.hpp"
#include "helpers.hpp"

using namespace echolab;
namespace fs = std::filesystem;

namespace {

std::vector<cdouble> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<cdouble> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    cdouble acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n);
      acc += x[i] * cdouble{std::cos(ang), std::sin(ang)};
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> white_noise(std::size_t n, Pcg32& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal() * 0.3;
  return x;
}

double max_interior_rel_err(const std::vector<double>& x, const std::vector<double>& y,
                            int margin) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  double worst = 0.0;
  for (std::size_t i = static_cast<std::size_t>(margin); i + margin < x.size(); ++i)
    worst = std::max(worst, std::fabs(x[i] - y[i]) / peak);
  return worst;
}

}  // namespace

TEST_CASE("rfft matches the naive DFT on both kernel paths") {
  Pcg32 rng(11);
  for (std::size_t n : {256u, 320u, 7u, 100u}) {  // radix-2, Bluestein, odd, composite
    const auto x = white_noise(n, rng);
    const auto fast = rfft(x);
    const auto slow = naive_dft(x);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k)
      CHECK(std::abs(fast[k] - slow[k]) < 1e-9 * static_cast<double>(n));
  }
}

TEST_CASE("irfft inverts rfft") {
  Pcg32 rng(12);
  for (std::size_t n : {320u, 64u, 33u}) {
    const auto x = white_noise(n, rng);
    const auto back = irfft(rfft(x), n);
    REQUIRE(back.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
  }
}

TEST_CASE("fft_convolve_truncated matches direct convolution") {
  Pcg32 rng(13);
  const auto x = white_noise(400, rng);
  const auto h = white_noise(57, rng);
  const auto y = fft_convolve_truncated(x, h);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < y.size(); i += 17) {
    double ref = 0.0;
    for (std::size_t k = 0; k < h.size() && k <= i; ++k) ref += h[k] * x[i - k];
    CHECK(y[i] == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("hamming window shape") {
  const auto w = hamming_window(320);
  REQUIRE(w.size() == 320);
  for (int i = 0; i < 160; ++i) CHECK(w[static_cast<std::size_t>(i)] ==
                                      doctest::Approx(w[static_cast<std::size_t>(319 - i)]));
  CHECK(w[0] == doctest::Approx(0.08).epsilon(1e-6));
  CHECK(*std::max_element(w.begin(), w.end()) <= 1.0);
}

TEST_CASE("frame grid constants") {
  StftConfig cfg;
  CHECK(cfg.win_samples() == 320);
  CHECK(cfg.hop_samples() == 160);
  CHECK(cfg.num_bins() == 161);
  CHECK(cfg.num_frames(320) == 1);
  CHECK(cfg.num_frames(100) == 1);   // shorter than one window
  CHECK(cfg.num_frames(321) == 2);   // one extra sample starts a padded frame
  CHECK(cfg.num_frames(480) == 2);
  CHECK(cfg.num_frames(16000) == 99);
}

TEST_CASE("stft round-trip is exact in the interior") {
  Pcg32 rng(14);
  const StftConfig cfg;
  SUBCASE("white noise") {
    const auto x = white_noise(16000, rng);
    const auto y = istft(stft(x, cfg), cfg);
    REQUIRE(y.size() == x.size());
    CHECK(max_interior_rel_err(x, y, cfg.win_samples()) < 1e-6);
  }
  SUBCASE("speech surrogate") {
    auto x = speech_surrogate(12345, kSampleRate, rng);  // non-multiple length
    const auto y = istft(stft(x, cfg), cfg);
    REQUIRE(y.size() == x.size());
    CHECK(max_interior_rel_err(x, y, cfg.win_samples()) < 1e-6);
  }
}

TEST_CASE("istft honours target_samples") {
  Pcg32 rng(15);
  const StftConfig cfg;
  const auto x = white_noise(5000, rng);
  const SpectroTensor spec = stft(x, cfg);
  CHECK(istft(spec, cfg).size() == 5000);         // stored source length
  CHECK(istft(spec, cfg, 4000).size() == 4000);   // explicit override
}

TEST_CASE("multichannel stft keeps channels independent") {
  Pcg32 rng(16);
  const StftConfig cfg;
  MultichannelWave w(3, 3200);
  for (auto& ch : w.channels) ch = white_noise(3200, rng);
  const SpectroTensor multi = stft(w, cfg);
  CHECK(multi.channels == 3);
  for (int c = 0; c < 3; ++c) {
    const SpectroTensor single = stft(w.channels[static_cast<std::size_t>(c)], cfg);
    for (int t = 0; t < multi.frames; ++t)
      for (int f = 0; f < multi.bins; ++f) CHECK(multi.at(c, t, f) == single.at(0, t, f));
  }
}

TEST_CASE("ri_pack interleaves and ri_unpack inverts") {
  Pcg32 rng(17);
  const StftConfig cfg;
  const auto a = stft(white_noise(2000, rng), cfg);
  const auto b = stft(white_noise(2000, rng), cfg);
  const nn::Tensor<float> packed = ri_pack({&a, &b});
  REQUIRE(packed.dim(0) == 4);
  REQUIRE(packed.dim(1) == a.frames);
  REQUIRE(packed.dim(2) == a.bins);
  for (int t = 0; t < a.frames; ++t)
    for (int f = 0; f < a.bins; ++f) {
      CHECK(packed.at(0, t, f) == static_cast<float>(a.at(0, t, f).real()));
      CHECK(packed.at(1, t, f) == static_cast<float>(a.at(0, t, f).imag()));
      CHECK(packed.at(2, t, f) == static_cast<float>(b.at(0, t, f).real()));
      CHECK(packed.at(3, t, f) == static_cast<float>(b.at(0, t, f).imag()));
    }

  nn::Tensor<float> planes({2, a.frames, a.bins});
  for (int t = 0; t < a.frames; ++t)
    for (int f = 0; f < a.bins; ++f) {
      planes.at(0, t, f) = packed.at(0, t, f);
      planes.at(1, t, f) = packed.at(1, t, f);
    }
  const SpectroTensor back = ri_unpack(planes, cfg);
  for (int t = 0; t < a.frames; ++t)
    for (int f = 0; f < a.bins; ++f) {
      CHECK(back.at(0, t, f).real() == doctest::Approx(a.at(0, t, f).real()).epsilon(1e-6));
      CHECK(back.at(0, t, f).imag() == doctest::Approx(a.at(0, t, f).imag()).epsilon(1e-6));
    }
}

TEST_CASE("wav float32 round-trip is exact, pcm16 is quantized") {
  Pcg32 rng(18);
  MultichannelWave w(2, 777);
  for (auto& ch : w.channels)
    for (auto& v : ch) v = rng.uniform(-0.9, 0.9);
  // float32 storage reproduces the float-cast samples exactly
  const fs::path pf = fs::temp_directory_path() / "echolab_test_f32.wav";
  write_wav(pf.string(), w, WavEncoding::kFloat32);
  const MultichannelWave rf = read_wav(pf.string());
  REQUIRE(rf.num_channels() == 2);
  REQUIRE(rf.num_samples() == 777);
  CHECK(rf.sample_rate == kSampleRate);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 777; ++i)
      CHECK(rf.channels[c][i] == static_cast<double>(static_cast<float>(w.channels[c][i])));

  const fs::path pq = fs::temp_directory_path() / "echolab_test_p16.wav";
  write_wav(pq.string(), w, WavEncoding::kPcm16);
  const MultichannelWave rq = read_wav(pq.string());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 777; ++i)
      CHECK(std::fabs(rq.channels[c][i] - w.channels[c][i]) < 1.0 / 32000.0);

  fs::remove(pf);
  fs::remove(pq);
}

TEST_CASE("wav reader rejects bad input") {
  CHECK_THROWS(read_wav("/nonexistent/echolab.wav"));
  const fs::path p = fs::temp_directory_path() / "echolab_test_bad.wav";
  {
    std::FILE* f = std::fopen(p.string().c_str(), "wb");
    std::fwrite("not a wav at all", 1, 16, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_wav(p.string()), DomainError);
  fs::remove(p);
}
