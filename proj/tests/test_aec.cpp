#include <cmath>
#include <vector>

#include <doctest.h>

#include "echolab/aec.hpp"

#include "helpers.hpp"

using namespace echolab;

namespace {

IscrnConfig small_config(FusionMode mode, std::uint64_t seed = 0x15c21) {
  IscrnConfig cfg;
  cfg.channels = 4;
  cfg.f_bins = 9;
  cfg.lstm_hidden = 6;
  cfg.s4d_state = 4;
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

DirectionInfo<float> random_info(int tlen, int f, Pcg32& rng) {
  DirectionInfo<float> info;
  info.tap_e = testutil::random_tensor({2, tlen, f}, rng, 0.7);
  info.tap_t = testutil::random_tensor({tlen, f}, rng, 0.7);
  info.t_logits = testutil::random_tensor({tlen, kNumDirections, 2}, rng, 1.0);
  info.beam_ri = testutil::random_tensor({2, tlen, f}, rng, 0.7);
  return info;
}

}  // namespace

TEST_CASE("aec: fusion channel accounting") {
  CHECK(fusion_extra_channels(FusionMode::kNone) == 0);
  CHECK(fusion_extra_channels(FusionMode::kE) == 2);
  CHECK(fusion_extra_channels(FusionMode::kEt) == 1);
  CHECK(fusion_extra_channels(FusionMode::kEta) == 1);
  CHECK(fusion_extra_channels(FusionMode::kB) == 2);

  IscrnConfig cfg;
  CHECK(cfg.base_channels() == 14);
  for (FusionMode m : {FusionMode::kNone, FusionMode::kE, FusionMode::kEt, FusionMode::kEta,
                       FusionMode::kB}) {
    cfg.mode = m;
    CHECK(cfg.in_channels() == 14 + fusion_extra_channels(m));
    CHECK(fusion_mode_from_string(to_string(m)) == m);
    CHECK_NOTHROW(build_iscrn(small_config(m)));
  }
  CHECK_THROWS_AS(fusion_mode_from_string("bogus"), ConfigError);
}

TEST_CASE("aec: fuse appends the mode's planes and preserves the base") {
  const int tlen = 5, f = 9;
  Pcg32 rng(404);
  const auto base = testutil::random_tensor({14, tlen, f}, rng, 0.8);
  const auto info = random_info(tlen, f, rng);

  for (FusionMode m : {FusionMode::kE, FusionMode::kEt, FusionMode::kEta, FusionMode::kB}) {
    IscrnModel<float> model(small_config(m));
    const auto fused = model.fuse(base, &info, false);
    REQUIRE(fused.dim(0) == 14 + fusion_extra_channels(m));
    REQUIRE(fused.dim(1) == tlen);
    REQUIRE(fused.dim(2) == f);
    bool base_ok = true;
    for (int c = 0; c < 14; ++c)
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) base_ok = base_ok && fused.at(c, t, j) == base.at(c, t, j);
    CHECK(base_ok);

    if (m == FusionMode::kE) {
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) {
          CHECK(fused.at(14, t, j) == info.tap_e.at(0, t, j));
          CHECK(fused.at(15, t, j) == info.tap_e.at(1, t, j));
        }
    } else if (m == FusionMode::kEt) {
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) CHECK(fused.at(14, t, j) == info.tap_t.at(t, j));
    } else if (m == FusionMode::kB) {
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) {
          CHECK(fused.at(14, t, j) == info.beam_ri.at(0, t, j));
          CHECK(fused.at(15, t, j) == info.beam_ri.at(1, t, j));
        }
    }
    // Missing info is an error for every fusing mode.
    CHECK_THROWS_AS(model.fuse(base, nullptr, false), DomainError);
  }
}

TEST_CASE("aec: eta plane feeds softmaxed logits through the linear map") {
  const int tlen = 4, f = 9;
  Pcg32 rng(55);
  const auto base = testutil::random_tensor({14, tlen, f}, rng, 0.8);
  IscrnModel<float> model(small_config(FusionMode::kEta));

  // Equal logits per direction: every frame sees the same flat 0.5 vector, so
  // the learned plane must repeat one row.
  DirectionInfo<float> flat;
  flat.t_logits = nn::Tensor<float>({tlen, kNumDirections, 2});
  const auto fused = model.fuse(base, &flat, false);
  for (int t = 1; t < tlen; ++t)
    for (int j = 0; j < f; ++j) CHECK(fused.at(14, t, j) == fused.at(14, 0, j));

  // Softmax shift invariance: adding a constant per (frame, direction) pair
  // leaves the plane unchanged.
  DirectionInfo<float> info;
  info.t_logits = testutil::random_tensor({tlen, kNumDirections, 2}, rng, 1.0);
  const auto a = model.fuse(base, &info, false);
  DirectionInfo<float> shifted = info;
  for (int t = 0; t < tlen; ++t)
    for (int d = 0; d < kNumDirections; ++d)
      for (int k = 0; k < 2; ++k) shifted.t_logits.at(t, d, k) += 3.0f;
  const auto b = model.fuse(base, &shifted, false);
  for (int t = 0; t < tlen; ++t)
    for (int j = 0; j < f; ++j)
      CHECK(std::fabs(a.at(14, t, j) - b.at(14, t, j)) < 1e-4);

  // And the plane actually depends on the logits.
  DirectionInfo<float> other;
  other.t_logits = testutil::random_tensor({tlen, kNumDirections, 2}, rng, 1.0);
  const auto c = model.fuse(base, &other, false);
  bool differs = false;
  for (int t = 0; t < tlen && !differs; ++t)
    for (int j = 0; j < f && !differs; ++j) differs = a.at(14, t, j) != c.at(14, t, j);
  CHECK(differs);
}

TEST_CASE("aec: mode none ignores supplied info with a counted warning") {
  const int tlen = 3, f = 9;
  Pcg32 rng(7);
  const auto base = testutil::random_tensor({14, tlen, f}, rng, 0.8);
  const auto info = random_info(tlen, f, rng);
  IscrnModel<float> model(small_config(FusionMode::kNone));
  CHECK(model.ignored_info_count() == 0);
  const auto fused = model.fuse(base, &info, false);
  CHECK(fused.same_shape(base));
  CHECK(fused.raw() == base.raw());
  CHECK(model.ignored_info_count() == 1);
  model.fuse(base, &info, false);
  CHECK(model.ignored_info_count() == 2);
  model.fuse(base, nullptr, false);
  CHECK(model.ignored_info_count() == 2);
}

TEST_CASE("aec: fuse validates plane shapes") {
  const int tlen = 4, f = 9;
  Pcg32 rng(31);
  const auto base = testutil::random_tensor({14, tlen, f}, rng, 0.8);
  auto info = random_info(tlen, f, rng);

  IscrnModel<float> e(small_config(FusionMode::kE));
  info.tap_e = testutil::random_tensor({2, tlen, f + 1}, rng, 0.5);
  CHECK_THROWS_AS(e.fuse(base, &info, false), DomainError);

  IscrnModel<float> et(small_config(FusionMode::kEt));
  info.tap_t = testutil::random_tensor({tlen + 1, f}, rng, 0.5);
  CHECK_THROWS_AS(et.fuse(base, &info, false), DomainError);

  IscrnModel<float> eta(small_config(FusionMode::kEta));
  info.t_logits = testutil::random_tensor({tlen, kNumDirections, 3}, rng, 0.5);
  CHECK_THROWS_AS(eta.fuse(base, &info, false), DomainError);

  IscrnModel<float> none(small_config(FusionMode::kNone));
  CHECK_THROWS_AS(none.fuse(testutil::random_tensor({15, tlen, f}, rng, 0.5), nullptr, false),
                  DomainError);
}

TEST_CASE("aec: mask is tanh-bounded and the estimate is mask times reference") {
  const int tlen = 6, f = 9;
  Pcg32 rng(88);
  IscrnModel<float> model(small_config(FusionMode::kNone));
  const auto fused = testutil::random_tensor({14, tlen, f}, rng, 0.9);
  const auto out = model.forward(fused, false);
  REQUIRE(out.mask.dim(0) == 2);
  REQUIRE(out.est_ri.same_shape(out.mask));
  for (int t = 0; t < tlen; ++t)
    for (int j = 0; j < f; ++j) {
      const float mr = out.mask.at(0, t, j), mi = out.mask.at(1, t, j);
      CHECK(std::fabs(mr) < 1.0f);
      CHECK(std::fabs(mi) < 1.0f);
      const float yr = fused.at(0, t, j), yi = fused.at(1, t, j);
      CHECK(out.est_ri.at(0, t, j) == mr * yr - mi * yi);
      CHECK(out.est_ri.at(1, t, j) == mr * yi + mi * yr);
    }

  // Silence in, silence out: the bounded mask cannot invent energy.
  const auto silent = model.forward(nn::Tensor<float>({14, tlen, f}), false);
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < tlen; ++t)
      for (int j = 0; j < f; ++j) CHECK(silent.est_ri.at(c, t, j) == 0.0f);

  // Direct-RI head skips the bounding entirely.
  IscrnConfig direct = small_config(FusionMode::kNone);
  direct.mask_output = false;
  IscrnModel<float> dm(direct);
  const auto dout = dm.forward(fused, false);
  CHECK(dout.mask.raw() == dout.est_ri.raw());
}

TEST_CASE("aec: estimates are causal in the frame axis") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    IscrnModel<float> model(small_config(FusionMode::kNone, 900 + seed));
    Pcg32 rng(seed);
    const int tlen = 10, t0 = 5, f = 9;
    auto fused = testutil::random_tensor({14, tlen, f}, rng, 0.8);
    const auto base = model.forward(fused, false);
    for (int c = 0; c < 14; ++c)
      for (int j = 0; j < f; ++j) fused.at(c, t0, j) += 0.3f;
    const auto pert = model.forward(fused, false);

    bool pre_equal = true;
    for (int c = 0; c < 2; ++c)
      for (int t = 0; t < t0; ++t)
        for (int j = 0; j < f; ++j)
          pre_equal = pre_equal && base.est_ri.at(c, t, j) == pert.est_ri.at(c, t, j);
    CHECK(pre_equal);

    bool at_differs = false;
    for (int c = 0; c < 2 && !at_differs; ++c)
      for (int j = 0; j < f && !at_differs; ++j)
        at_differs = base.est_ri.at(c, t0, j) != pert.est_ri.at(c, t0, j);
    CHECK(at_differs);
  }
}

TEST_CASE("aec: streaming steps replay the batch forward bit for bit") {
  const int tlen = 7, f = 9;
  for (FusionMode m : {FusionMode::kNone, FusionMode::kE, FusionMode::kEt, FusionMode::kEta,
                       FusionMode::kB}) {
    IscrnModel<float> model(small_config(m, 0xabc));
    Pcg32 rng(17 + static_cast<std::uint64_t>(m));
    const auto base = testutil::random_tensor({14, tlen, f}, rng, 0.8);
    const auto info = random_info(tlen, f, rng);
    const auto fused = model.fuse(base, m == FusionMode::kNone ? nullptr : &info, false);
    const auto batch = model.forward(fused, false);

    model.reset_stream();
    nn::Tensor<float> base_frame({14, f});
    for (int t = 0; t < tlen; ++t) {
      for (int c = 0; c < 14; ++c)
        for (int j = 0; j < f; ++j) base_frame.at(c, j) = base.at(c, t, j);
      DirectionInfo<float> row;
      row.tap_e = nn::Tensor<float>({2, f});
      row.tap_t = nn::Tensor<float>({f});
      row.t_logits = nn::Tensor<float>({kNumDirections, 2});
      row.beam_ri = nn::Tensor<float>({2, f});
      for (int j = 0; j < f; ++j) {
        row.tap_e.at(0, j) = info.tap_e.at(0, t, j);
        row.tap_e.at(1, j) = info.tap_e.at(1, t, j);
        row.tap_t.at(j) = info.tap_t.at(t, j);
        row.beam_ri.at(0, j) = info.beam_ri.at(0, t, j);
        row.beam_ri.at(1, j) = info.beam_ri.at(1, t, j);
      }
      for (int d = 0; d < kNumDirections; ++d)
        for (int k = 0; k < 2; ++k) row.t_logits.at(d, k) = info.t_logits.at(t, d, k);

      const auto frame = model.fuse_frame(base_frame, m == FusionMode::kNone ? nullptr : &row);
      const auto out = model.step(frame);
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < f; ++j) {
          CHECK(out.est_ri.at(c, j) == batch.est_ri.at(c, t, j));
          CHECK(out.mask.at(c, j) == batch.mask.at(c, t, j));
        }
    }
  }
}

TEST_CASE("aec: frequency axis is preserved end to end") {
  IscrnModel<float> model(small_config(FusionMode::kNone));
  Pcg32 rng(2);
  for (int tlen : {1, 4}) {
    const auto out = model.forward(testutil::random_tensor({14, tlen, 9}, rng, 0.5), false);
    CHECK(out.est_ri.dim(0) == 2);
    CHECK(out.est_ri.dim(1) == tlen);
    CHECK(out.est_ri.dim(2) == 9);
    CHECK(out.est_ri.all_finite());
    model.reset_stream();
  }
  CHECK_THROWS_AS(model.forward(nn::Tensor<float>({14, 4, 8}), false), DomainError);
}

TEST_CASE("aec: parameter count matches the registered parameters") {
  for (FusionMode m : {FusionMode::kNone, FusionMode::kEta}) {
    IscrnModel<float> model(small_config(m));
    long total = 0;
    for (auto* p : model.params()) total += static_cast<long>(p->value.numel());
    CHECK(model.param_count() == total);
  }
  // The eta linear map is counted only when the mode can train it.
  CHECK(IscrnModel<float>(small_config(FusionMode::kEta)).param_count() >
        IscrnModel<float>(small_config(FusionMode::kNone)).param_count());
}

TEST_CASE("aec: est_to_spectro keeps the RI planes") {
  Pcg32 rng(12);
  const auto est = testutil::random_tensor({2, 5, 161}, rng, 0.6);
  StftConfig sc;
  const SpectroTensor sp = est_to_spectro(est, sc, 1000);
  CHECK(sp.channels == 1);
  CHECK(sp.frames == 5);
  CHECK(sp.bins == 161);
  CHECK(sp.source_samples == 1000);
  SpectroTensor& mut = const_cast<SpectroTensor&>(sp);
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < 161; ++j) {
      CHECK(std::fabs(mut.at(0, t, j).real() - est.at(0, t, j)) < 1e-6);
      CHECK(std::fabs(mut.at(0, t, j).imag() - est.at(1, t, j)) < 1e-6);
    }
  CHECK_THROWS_AS(est_to_spectro(testutil::random_tensor({3, 5, 161}, rng, 0.5), sc, 0),
                  DomainError);
}
