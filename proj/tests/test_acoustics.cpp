// Image-method RIRs, loudspeaker nonlinearity and the mixture signal model.

#include <doctest.h>

#include <cmath>

#include "echolab/acoustics.hpp"
#include "echolab/synth.hpp"

using namespace echolab;

namespace {

double rel_residual(const std::vector<double>& diff, const std::vector<double>& ref) {
  return std::sqrt(energy(diff) / energy(ref));
}

RenderedScenario quick_render(TalkPattern pattern, std::uint64_t seed, bool anechoic,
                              double duration_s = 1.0) {
  ScenarioPolicy pol;
  pol.duration_s = duration_s;
  pol.anechoic = anechoic;
  pol.fixed_pattern = true;
  pol.pattern = pattern;
  RenderedScenario rs;
  rs.scenario = sample_scenario(pol, seed);
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  Pcg32 far_rng(mix_seed(seed, 1)), near_rng(mix_seed(seed, 2));
  rs.far_end = speech_surrogate(n, kSampleRate, far_rng);
  rs.near_speech = speech_surrogate(n, kSampleRate, near_rng);
  RenderOptions opt;
  opt.rir.max_order = anechoic ? 1 : 12;  // the identities hold at any order
  rs.render = render_mixture(rs.scenario, rs.far_end, rs.near_speech, opt);
  return rs;
}

}  // namespace

TEST_CASE("anechoic rir is a single tap at the propagation delay") {
  const RoomSpec room{6.0, 5.0, 4.0, 0.0};
  const Vec3 src{1.0, 1.0, 2.0}, rcv{4.0, 3.5, 2.0};
  const Rir rir = simulate_rir(room, src, rcv);
  const double dist = norm(src - rcv);
  const int expected = static_cast<int>(std::llround(dist / kSpeedOfSound * kSampleRate));
  CHECK(std::abs(rir.first_nonzero_tap() - expected) <= 1);
  // inverse-distance amplitude, all other taps zero
  int nonzero = 0;
  for (double t : rir.taps)
    if (t != 0.0) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(rir.taps[static_cast<std::size_t>(rir.first_nonzero_tap())] ==
        doctest::Approx(1.0 / (4.0 * M_PI * dist)).epsilon(1e-6));
}

TEST_CASE("force_anechoic matches t60 = 0") {
  RoomSpec room{5.0, 4.0, 3.0, 0.4};
  ImageMethodOptions opt;
  opt.force_anechoic = true;
  const Rir a = simulate_rir(room, {1, 1, 1}, {3, 2, 1.5}, kSampleRate, opt);
  room.t60_s = 0.0;
  const Rir b = simulate_rir(room, {1, 1, 1}, {3, 2, 1.5});
  REQUIRE(a.taps.size() == b.taps.size());
  for (std::size_t i = 0; i < a.taps.size(); ++i) CHECK(a.taps[i] == b.taps[i]);
}

TEST_CASE("reflection coefficient is physical") {
  RoomSpec room{6.0, 5.0, 4.0, 0.5};
  const double beta = reflection_coefficient(room);
  CHECK(beta > 0.0);
  CHECK(beta < 1.0);
  room.t60_s = 0.1;  // dead room absorbs more
  CHECK(reflection_coefficient(room) < beta);
  room.t60_s = 0.0;
  CHECK(reflection_coefficient(room) == 0.0);
}

TEST_CASE("schroeder t60 recovers the target") {
  const RoomSpec room{6.0, 5.0, 3.5, 0.5};
  const Rir rir = simulate_rir(room, {1.5, 1.2, 1.6}, {4.2, 3.6, 1.4});
  const double measured = schroeder_t60(rir);
  CHECK(measured > 0.4);
  CHECK(measured < 0.6);
}

TEST_CASE("loudspeaker nonlinearity") {
  Pcg32 rng(7);
  std::vector<double> x(2000);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);

  SUBCASE("silent input passes through") {
    const std::vector<double> z(100, 0.0);
    const auto y = loudspeaker_nonlinearity(z);
    CHECK(y == z);
  }
  SUBCASE("disabled config is the identity") {
    NonlinearityConfig cfg;
    cfg.enabled = false;
    CHECK(loudspeaker_nonlinearity(x, cfg) == x);
  }
  SUBCASE("output is bounded and clipping engages") {
    const auto y = loudspeaker_nonlinearity(x);
    double peak_in = 0.0, peak_out = 0.0;
    for (double v : x) peak_in = std::max(peak_in, std::fabs(v));
    for (double v : y) peak_out = std::max(peak_out, std::fabs(v));
    CHECK(peak_out > 0.0);
    CHECK(peak_out < 2.0 * peak_in);  // output_scale keeps things tame
    // the hard clip makes the top of the range flat: many samples share the max
    int at_max = 0;
    for (double v : y)
      if (std::fabs(std::fabs(v) - peak_out) < 1e-12) ++at_max;
    CHECK(at_max > 5);
  }
  SUBCASE("asymmetry distorts positive and negative halves differently") {
    std::vector<double> pos{0.1, 0.2, 0.3, 0.5};
    std::vector<double> neg{-0.1, -0.2, -0.3, -0.5};
    const auto yp = loudspeaker_nonlinearity(pos);
    const auto yn = loudspeaker_nonlinearity(neg);
    for (std::size_t i = 0; i < pos.size(); ++i)
      CHECK(std::fabs(yp[i]) != doctest::Approx(std::fabs(yn[i])).epsilon(1e-6));
  }
}

TEST_CASE("ser helper") {
  std::vector<double> a(100, 0.5), b(100, 0.05);
  CHECK(ser(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(std::isinf(ser(a, std::vector<double>(100, 0.0))));
}

TEST_CASE("mixture decomposes exactly") {
  for (bool anechoic : {true, false}) {
    const RenderedScenario rs = quick_render(TalkPattern::kDoubleTalk, 5, anechoic);
    const auto& r = rs.render;
    const std::size_t q = r.mixture.num_channels();
    REQUIRE(q == 6);
    for (std::size_t c = 0; c < q; ++c) {
      std::vector<double> diff = r.mixture.channels[c];
      for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] -= r.echo.channels[c][i] + r.near_end.channels[c][i];
      CHECK(rel_residual(diff, r.mixture.channels[c]) <= 1e-10);

      // echo splits into per-speaker images, near end into direct + reverb
      std::vector<double> echo_sum(diff.size(), 0.0);
      for (const auto& per : r.echo_per_speaker)
        for (std::size_t i = 0; i < diff.size(); ++i) echo_sum[i] += per.channels[c][i];
      for (std::size_t i = 0; i < diff.size(); ++i) echo_sum[i] -= r.echo.channels[c][i];
      CHECK(rel_residual(echo_sum, r.echo.channels[c]) <= 1e-10);

      std::vector<double> near_sum(diff.size(), 0.0);
      for (std::size_t i = 0; i < diff.size(); ++i)
        near_sum[i] = r.near_direct.channels[c][i] + r.near_reverb.channels[c][i] -
                      r.near_end.channels[c][i];
      CHECK(rel_residual(near_sum, r.near_end.channels[c]) <= 1e-10);
    }
  }
}

TEST_CASE("requested ser is realized at the reference mic") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const RenderedScenario rs = quick_render(TalkPattern::kDoubleTalk, seed, false);
    const double got =
        ser(rs.render.near_end.channels[0], rs.render.echo.channels[0]);
    CHECK(std::fabs(got - rs.scenario.ser_db) <= 0.01);
  }
}

TEST_CASE("talk patterns silence the right side") {
  const RenderedScenario fe = quick_render(TalkPattern::kFarEndOnly, 9, true);
  CHECK(energy(fe.render.near_end.channels[0]) == 0.0);
  CHECK(energy(fe.render.echo.channels[0]) > 0.0);

  const RenderedScenario ne = quick_render(TalkPattern::kNearEndOnly, 9, true);
  CHECK(energy(ne.render.echo.channels[0]) == 0.0);
  CHECK(energy(ne.render.near_end.channels[0]) > 0.0);
}

TEST_CASE("anechoic near end has no reverb part") {
  const RenderedScenario rs = quick_render(TalkPattern::kDoubleTalk, 11, true);
  CHECK(energy(rs.render.near_reverb.channels[0]) == 0.0);
  CHECK(energy(rs.render.near_direct.channels[0]) ==
        doctest::Approx(energy(rs.render.near_end.channels[0])));
}

TEST_CASE("moving talker renders with a crossfade, identities intact") {
  ScenarioPolicy pol;
  pol.kind = PolicyKind::kTalkerMoves;
  pol.duration_s = 3.5;
  pol.anechoic = true;
  pol.fixed_pattern = true;
  pol.pattern = TalkPattern::kDoubleTalk;
  RenderedScenario rs;
  rs.scenario = sample_scenario(pol, 13);
  const std::size_t n = static_cast<std::size_t>(std::llround(3.5 * kSampleRate));
  Pcg32 far_rng(100), near_rng(200);
  rs.far_end = speech_surrogate(n, kSampleRate, far_rng);
  rs.near_speech = speech_surrogate(n, kSampleRate, near_rng);
  rs.render = render_mixture(rs.scenario, rs.far_end, rs.near_speech);
  for (std::size_t c = 0; c < 6; ++c) {
    std::vector<double> diff = rs.render.mixture.channels[c];
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] -= rs.render.echo.channels[c][i] + rs.render.near_end.channels[c][i];
    CHECK(rel_residual(diff, rs.render.mixture.channels[c]) <= 1e-10);
  }
}
