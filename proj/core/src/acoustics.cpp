#include "echolab/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "echolab/fft.hpp"

namespace echolab {

namespace {
constexpr double kPi = 3.14159265358979323846;

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

double vec_energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double s : v) e += s * s;
  return e;
}

void check_inside(const RoomSpec& room, const Vec3& p, const char* what) {
  const double dims[3] = {room.length_m, room.width_m, room.height_m};
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < dims[i]))
      throw DomainError(std::string(what) + " must lie strictly inside the room");
  }
}
}  // namespace

int Rir::first_nonzero_tap() const {
  for (std::size_t i = 0; i < taps.size(); ++i)
    if (taps[i] != 0.0) return static_cast<int>(i);
  return -1;
}

double Rir::energy() const { return vec_energy(taps); }

double reflection_coefficient(const RoomSpec& room, bool use_sabine) {
  require(room.t60_s > 0.0, "reflection_coefficient: t60 must be positive");
  const double v = room.length_m * room.width_m * room.height_m;
  const double s = 2.0 * (room.length_m * room.width_m + room.length_m * room.height_m +
                          room.width_m * room.height_m);
  const double sabine_alpha = 0.161 * v / (s * room.t60_s);
  const double alpha = use_sabine ? sabine_alpha : 1.0 - std::exp(-sabine_alpha);
  if (alpha >= 1.0)
    throw DomainError("reflection_coefficient: requested t60 needs absorption >= 1");
  return std::sqrt(1.0 - alpha);
}

Rir simulate_rir(const RoomSpec& room, const Vec3& source, const Vec3& receiver, int fs,
                 const ImageMethodOptions& opt) {
  require(fs > 0, "simulate_rir: bad sample rate");
  require(room.t60_s >= 0.0, "simulate_rir: negative t60");
  check_inside(room, source, "simulate_rir: source");
  check_inside(room, receiver, "simulate_rir: receiver");
  const double d0 = norm(source - receiver);
  require(d0 > 1e-9, "simulate_rir: source and receiver coincide");

  Rir rir;
  rir.sample_rate = fs;
  rir.source = source;
  rir.receiver = receiver;
  rir.t60_s = room.t60_s;

  const int direct_tap = round_half_up(d0 / kSpeedOfSound * fs);
  const bool anechoic = opt.force_anechoic || room.t60_s <= 0.0;
  if (anechoic) {
    rir.taps.assign(static_cast<std::size_t>(direct_tap) + 1, 0.0);
    rir.taps[static_cast<std::size_t>(direct_tap)] = 1.0 / (4.0 * kPi * d0);
    return rir;
  }

  const double beta = reflection_coefficient(room, opt.use_sabine);
  // Cover a bit past t60 so the decay fit never runs into the truncation.
  const int len = direct_tap + round_half_up(1.25 * room.t60_s * fs) + 1;
  rir.taps.assign(static_cast<std::size_t>(len), 0.0);
  const double max_dist = (len - 1) * kSpeedOfSound / fs;

  const double dims[3] = {room.length_m, room.width_m, room.height_m};
  int m_max[3];
  int pow_needed = 0;
  for (int i = 0; i < 3; ++i) {
    m_max[i] = std::min(opt.max_order,
                        static_cast<int>(std::ceil(max_dist / (2.0 * dims[i]))) + 1);
    pow_needed = std::max(pow_needed, 2 * m_max[i] + 1);
  }
  std::vector<double> beta_pow(static_cast<std::size_t>(3 * pow_needed) + 1);
  beta_pow[0] = 1.0;
  for (std::size_t k = 1; k < beta_pow.size(); ++k) beta_pow[k] = beta_pow[k - 1] * beta;

  const double idx_scale = static_cast<double>(fs) / kSpeedOfSound;
  for (int mx = -m_max[0]; mx <= m_max[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * source[0] - receiver[0] + 2.0 * mx * dims[0];
      const int ex = std::abs(mx - qx) + std::abs(mx);
      for (int my = -m_max[1]; my <= m_max[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * source[1] - receiver[1] + 2.0 * my * dims[1];
          const int exy = ex + std::abs(my - qy) + std::abs(my);
          const double dxy2 = dx * dx + dy * dy;
          for (int mz = -m_max[2]; mz <= m_max[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double dz = (1 - 2 * qz) * source[2] - receiver[2] + 2.0 * mz * dims[2];
              const double dist = std::sqrt(dxy2 + dz * dz);
              const int tap = round_half_up(dist * idx_scale);
              if (tap >= len || dist < 1e-9) continue;
              const int order = exy + std::abs(mz - qz) + std::abs(mz);
              rir.taps[static_cast<std::size_t>(tap)] +=
                  beta_pow[static_cast<std::size_t>(order)] / (4.0 * kPi * dist);
            }
          }
        }
      }
    }
  }
  return rir;
}

double schroeder_t60(const Rir& rir) {
  const std::size_t n = rir.taps.size();
  require(n > 1, "schroeder_t60: response too short");
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += rir.taps[i] * rir.taps[i];
    edc[i] = acc;
  }
  require(acc > 0.0, "schroeder_t60: silent response");

  // Least-squares line through the -5..-25 dB stretch of the decay curve.
  double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (edc[i] <= 0.0) break;
    const double db = 10.0 * std::log10(edc[i] / acc);
    if (db > -5.0) continue;
    if (db < -25.0) break;
    const double t = static_cast<double>(i) / rir.sample_rate;
    sum_t += t;
    sum_y += db;
    sum_tt += t * t;
    sum_ty += t * db;
    ++count;
  }
  if (count < 2) throw NumericError("schroeder_t60: decay range too short to fit");
  const double denom = count * sum_tt - sum_t * sum_t;
  if (denom <= 0.0) throw NumericError("schroeder_t60: degenerate fit");
  const double slope = (count * sum_ty - sum_t * sum_y) / denom;  // dB per second
  if (slope >= 0.0) throw NumericError("schroeder_t60: non-decaying response");
  return -60.0 / slope;
}

std::vector<double> loudspeaker_nonlinearity(const std::vector<double>& x,
                                             const NonlinearityConfig& cfg) {
  require(cfg.clip_ratio > 0.0 && cfg.clip_ratio <= 1.0,
          "loudspeaker_nonlinearity: clip_ratio must be in (0,1]");
  double peak = 0.0;
  for (double s : x) {
    require(std::isfinite(s), "loudspeaker_nonlinearity: non-finite input");
    peak = std::max(peak, std::fabs(s));
  }
  if (peak == 0.0) return x;

  const double clip = cfg.clip_ratio * peak;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::clamp(x[i], -clip, clip);
    const double a = v > 0.0 ? cfg.gain_pos : cfg.gain_neg;
    out[i] = cfg.output_scale * (2.0 / (1.0 + std::exp(-a * v)) - 1.0);
  }
  return out;
}

double ser(const std::vector<double>& near, const std::vector<double>& echo) {
  const double es = vec_energy(near);
  const double ee = vec_energy(echo);
  if (ee == 0.0) return std::numeric_limits<double>::infinity();
  if (es == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(es / ee);
}

namespace {

MultichannelWave blank_wave(int channels, std::size_t n, WaveRole role) {
  MultichannelWave w;
  w.role = role;
  w.sample_rate = kSampleRate;
  w.channels.assign(static_cast<std::size_t>(channels), std::vector<double>(n, 0.0));
  return w;
}

// Piecewise-linear crossfade weights: segment k holds weight 1 on its span,
// ramping complementarily over `fade` samples at each boundary so the
// per-sample weight sum is exactly 1.
std::vector<double> segment_weights(const std::vector<TimedPlacement>& segs, std::size_t k,
                                    std::size_t n, int fade) {
  std::vector<double> w(n, 0.0);
  const auto bound = [&](std::size_t i) {
    return i >= segs.size() ? static_cast<long>(n)
                            : static_cast<long>(std::lround(segs[i].start_s * kSampleRate));
  };
  const long rise = bound(k);
  const long fall = bound(k + 1);
  for (long i = rise; i < fall + fade && i < static_cast<long>(n); ++i) {
    if (i < 0) continue;
    double v = 1.0;
    if (k > 0 && i < rise + fade) v = static_cast<double>(i - rise + 1) / fade;
    if (k + 1 < segs.size() && i >= fall) v = 1.0 - static_cast<double>(i - fall + 1) / fade;
    if (v > 0.0) w[static_cast<std::size_t>(i)] = v;
  }
  return w;
}

}  // namespace

RenderResult render_mixture(const Scenario& scn, const std::vector<double>& far_end,
                            const std::vector<double>& near_speech, const RenderOptions& opt) {
  if (far_end.size() != near_speech.size())
    throw DomainError("render_mixture: far-end and near-end durations differ");
  require(!far_end.empty(), "render_mixture: empty input");
  require(!scn.array.mic_positions.empty(), "render_mixture: scenario has no mics");

  const int num_mics = scn.array.num_mics;
  const std::size_t n = far_end.size();
  const std::size_t num_ls = scn.loudspeakers.size();

  RenderResult out;
  out.mixture = blank_wave(num_mics, n, WaveRole::kMixture);
  out.echo = blank_wave(num_mics, n, WaveRole::kEcho);
  out.near_end = blank_wave(num_mics, n, WaveRole::kNearEnd);
  out.near_direct = blank_wave(num_mics, n, WaveRole::kNearEndDirect);
  out.near_reverb = blank_wave(num_mics, n, WaveRole::kNearEndReverb);
  out.echo_per_speaker.assign(num_ls, blank_wave(num_mics, n, WaveRole::kEcho));

  out.far_end_nl = opt.nonlinearity.enabled ? loudspeaker_nonlinearity(far_end, opt.nonlinearity)
                                            : far_end;

  const bool want_echo = scn.talk_pattern != TalkPattern::kNearEndOnly;
  const bool want_near = scn.talk_pattern != TalkPattern::kFarEndOnly;

  if (want_echo) {
    for (std::size_t p = 0; p < num_ls; ++p) {
      for (int q = 0; q < num_mics; ++q) {
        Rir h = simulate_rir(scn.room, scn.loudspeakers[p].position,
                             scn.array.mic_positions[static_cast<std::size_t>(q)], kSampleRate,
                             opt.rir);
        std::vector<double> e = fft_convolve_truncated(out.far_end_nl, h.taps);
        auto& mic_sum = out.echo.channels[static_cast<std::size_t>(q)];
        for (std::size_t i = 0; i < n; ++i) mic_sum[i] += e[i];
        out.echo_per_speaker[p].channels[static_cast<std::size_t>(q)] = std::move(e);
      }
    }
  }

  if (want_near) {
    require(!scn.talker.empty(), "render_mixture: scenario has no talker");
    const int fade = std::max(1, static_cast<int>(std::lround(opt.crossfade_s * kSampleRate)));
    ImageMethodOptions direct_only = opt.rir;
    direct_only.force_anechoic = true;
    for (std::size_t k = 0; k < scn.talker.size(); ++k) {
      const std::vector<double> w = segment_weights(scn.talker, k, n, fade);
      for (int q = 0; q < num_mics; ++q) {
        const Vec3& mic = scn.array.mic_positions[static_cast<std::size_t>(q)];
        Rir h_full = simulate_rir(scn.room, scn.talker[k].placement.position, mic, kSampleRate,
                                  opt.rir);
        Rir h_dir = simulate_rir(scn.room, scn.talker[k].placement.position, mic, kSampleRate,
                                 direct_only);
        const std::vector<double> full = fft_convolve_truncated(near_speech, h_full.taps);
        const std::vector<double> dir = fft_convolve_truncated(near_speech, h_dir.taps);
        auto& s = out.near_end.channels[static_cast<std::size_t>(q)];
        auto& sd = out.near_direct.channels[static_cast<std::size_t>(q)];
        for (std::size_t i = 0; i < n; ++i) {
          s[i] += w[i] * full[i];
          sd[i] += w[i] * dir[i];
        }
      }
    }
    for (int q = 0; q < num_mics; ++q) {
      auto& sr = out.near_reverb.channels[static_cast<std::size_t>(q)];
      const auto& s = out.near_end.channels[static_cast<std::size_t>(q)];
      const auto& sd = out.near_direct.channels[static_cast<std::size_t>(q)];
      for (std::size_t i = 0; i < n; ++i) sr[i] = s[i] - sd[i];
    }

    if (want_echo) {
      // Gain the near end (reference mic) to hit the requested SER; the
      // far-end playback level stays fixed. Skipped when either side is
      // silent and the ratio is undefined.
      const double ee = vec_energy(out.echo.channels[0]);
      const double es = vec_energy(out.near_end.channels[0]);
      if (ee > 0.0 && es > 0.0) {
        const double g = std::sqrt(std::pow(10.0, scn.ser_db / 10.0) * ee / es);
        for (MultichannelWave* w : {&out.near_end, &out.near_direct, &out.near_reverb})
          for (auto& ch : w->channels)
            for (double& v : ch) v *= g;
      }
    }
  }

  for (int q = 0; q < num_mics; ++q) {
    auto& y = out.mixture.channels[static_cast<std::size_t>(q)];
    const auto& e = out.echo.channels[static_cast<std::size_t>(q)];
    const auto& s = out.near_end.channels[static_cast<std::size_t>(q)];
    for (std::size_t i = 0; i < n; ++i) y[i] = e[i] + s[i];
  }
  return out;
}

}  // namespace echolab
