#include <cmath>
#include <vector>

#include <doctest.h>

#include "echolab/labels.hpp"
#include "echolab/ssdoa.hpp"

#include "helpers.hpp"

using namespace echolab;

namespace {

SsDoaConfig small_config(std::uint64_t seed) {
  SsDoaConfig cfg;
  cfg.channels = 6;
  cfg.f_bins = 33;
  cfg.seed = seed;
  return cfg;
}

bool tensors_equal(const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
  return a.same_shape(b) && a.raw() == b.raw();
}

}  // namespace

TEST_CASE("ssdoa: output shapes") {
  SsDoaNet<float> net;
  Pcg32 rng(11);
  const auto x = testutil::random_tensor({net.config().in_channels(), 5, 161}, rng, 0.5);
  const auto out = net.forward(x, false);
  CHECK(out.ls_logits.dim(0) == 5);
  CHECK(out.ls_logits.dim(1) == kNumDirections);
  CHECK(out.ls_logits.dim(2) == 2);
  CHECK(out.t_logits.same_shape(out.ls_logits));
  CHECK(out.tap_e.dim(0) == 2);
  CHECK(out.tap_e.dim(1) == 5);
  CHECK(out.tap_e.dim(2) == 161);
  CHECK(out.tap_t.dim(0) == 5);
  CHECK(out.tap_t.dim(1) == 161);
  CHECK(out.ls_logits.all_finite());

  CHECK_THROWS_AS(net.forward(nn::Tensor<float>({3, 5, 161}), false), DomainError);
  CHECK_THROWS_AS(net.step(nn::Tensor<float>({3, 161})), DomainError);
}

TEST_CASE("ssdoa: parameter count matches the registered parameters") {
  SsDoaNet<float> net;
  long total = 0;
  for (auto* p : net.params()) total += static_cast<long>(p->value.numel());
  CHECK(net.param_count() == total);
  CHECK(net.macs_per_frame() > 0);
}

TEST_CASE("ssdoa: outputs are causal in the frame axis") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    SsDoaNet<float> net(small_config(100 + seed));
    Pcg32 rng(seed);
    const int tlen = 12, t0 = 6;
    auto x = testutil::random_tensor({net.config().in_channels(), tlen, 33}, rng, 0.5);
    const auto base = net.forward(x, false);

    for (int ch = 0; ch < x.dim(0); ++ch)
      for (int j = 0; j < x.dim(2); ++j) x.at(ch, t0, j) += 0.25f + 0.01f * ch;
    const auto pert = net.forward(x, false);

    bool pre_equal = true;
    for (int t = 0; t < t0; ++t)
      for (int d = 0; d < kNumDirections; ++d)
        for (int k = 0; k < 2; ++k) {
          pre_equal = pre_equal && base.ls_logits.at(t, d, k) == pert.ls_logits.at(t, d, k);
          pre_equal = pre_equal && base.t_logits.at(t, d, k) == pert.t_logits.at(t, d, k);
        }
    for (int c = 0; c < 2; ++c)
      for (int t = 0; t < t0; ++t)
        for (int j = 0; j < 33; ++j)
          pre_equal = pre_equal && base.tap_e.at(c, t, j) == pert.tap_e.at(c, t, j);
    CHECK(pre_equal);

    bool at_differs = false;
    for (int c = 0; c < 2 && !at_differs; ++c)
      for (int j = 0; j < 33 && !at_differs; ++j)
        at_differs = base.tap_e.at(c, t0, j) != pert.tap_e.at(c, t0, j);
    CHECK(at_differs);
  }
}

TEST_CASE("ssdoa: streaming steps replay the batch forward bit for bit") {
  for (std::uint64_t seed : {5u, 6u}) {
    SsDoaNet<float> net(small_config(seed));
    Pcg32 rng(40 + seed);
    const int tlen = 10, f = 33;
    const int cin = net.config().in_channels();
    const auto x = testutil::random_tensor({cin, tlen, f}, rng, 0.6);
    const auto batch = net.forward(x, false);

    net.reset_stream();
    nn::Tensor<float> frame({cin, f});
    for (int t = 0; t < tlen; ++t) {
      for (int ch = 0; ch < cin; ++ch)
        for (int j = 0; j < f; ++j) frame.at(ch, j) = x.at(ch, t, j);
      const auto out = net.step(frame);
      for (int d = 0; d < kNumDirections; ++d)
        for (int k = 0; k < 2; ++k) {
          CHECK(out.ls_logits.at(d, k) == batch.ls_logits.at(t, d, k));
          CHECK(out.t_logits.at(d, k) == batch.t_logits.at(t, d, k));
        }
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < f; ++j) CHECK(out.tap_e.at(c, j) == batch.tap_e.at(c, t, j));
      for (int j = 0; j < f; ++j) CHECK(out.tap_t.at(j) == batch.tap_t.at(t, j));
    }
  }
}

TEST_CASE("ssdoa: stream_infer decodes like the batch path") {
  SsDoaNet<float> net(small_config(77));
  Pcg32 rng(99);
  const int tlen = 8;
  const auto x = testutil::random_tensor({net.config().in_channels(), tlen, 33}, rng, 0.6);

  const auto results = stream_infer(net, x, 0.5);
  const auto batch = net.forward(x, false);
  const auto ls_decoded = decode_predictions(batch.ls_logits, 2, 0.5);
  const auto t_decoded = decode_predictions(batch.t_logits, 1, 0.5);

  REQUIRE(results.size() == static_cast<std::size_t>(tlen));
  for (int t = 0; t < tlen; ++t) {
    const auto& r = results[static_cast<std::size_t>(t)];
    CHECK(r.index == t);
    CHECK(r.loudspeakers == ls_decoded[static_cast<std::size_t>(t)]);
    CHECK(r.talker == t_decoded[static_cast<std::size_t>(t)]);
    CHECK(r.loudspeakers.size() <= 2);
    CHECK(r.talker.size() <= 1);
    REQUIRE(r.ls_prob.size() == kNumDirections);
    for (int d = 0; d < kNumDirections; ++d) {
      const double margin =
          static_cast<double>(batch.ls_logits.at(t, d, 1)) - batch.ls_logits.at(t, d, 0);
      CHECK(std::fabs(r.ls_prob[static_cast<std::size_t>(d)] - 1.0 / (1.0 + std::exp(margin))) <
            1e-6);
    }
  }
}

TEST_CASE("ssdoa: stream rejects out-of-order frames") {
  SsDoaNet<float> net(small_config(3));
  SsDoaStream stream(net);
  nn::Tensor<float> frame({net.config().in_channels(), 33});
  stream.push(0, frame);
  CHECK_THROWS_AS(stream.push(2, frame), ProtocolError);
  CHECK_THROWS_AS(stream.push(0, frame), ProtocolError);
  stream.reset();
  CHECK_NOTHROW(stream.push(0, frame));
}

TEST_CASE("ssdoa: present_probabilities inverts the two-way softmax") {
  nn::Tensor<float> logits({kNumDirections, 2});
  Pcg32 rng(31);
  for (int d = 0; d < kNumDirections; ++d) {
    logits.at(d, 0) = static_cast<float>(2.0 * rng.next_double() - 1.0);
    logits.at(d, 1) = static_cast<float>(2.0 * rng.next_double() - 1.0);
  }
  const auto p = present_probabilities(logits);
  REQUIRE(p.size() == kNumDirections);
  for (int d = 0; d < kNumDirections; ++d) {
    const double e0 = std::exp(logits.at(d, 0)), e1 = std::exp(logits.at(d, 1));
    CHECK(std::fabs(p[static_cast<std::size_t>(d)] - e0 / (e0 + e1)) < 1e-6);
  }
  CHECK_THROWS_AS(present_probabilities(nn::Tensor<float>({3})), DomainError);
}

TEST_CASE("ssdoa: dropout reseed replays training noise") {
  SsDoaNet<float> net(small_config(8));
  Pcg32 rng(55);
  const auto x = testutil::random_tensor({net.config().in_channels(), 4, 33}, rng, 0.5);

  net.reseed_dropout(777);
  const auto a = net.forward(x, true);
  net.reseed_dropout(777);
  const auto b = net.forward(x, true);
  CHECK(tensors_equal(a.ls_logits, b.ls_logits));
  CHECK(tensors_equal(a.t_logits, b.t_logits));

  const auto c = net.forward(x, true);  // rng has advanced
  CHECK_FALSE(tensors_equal(a.ls_logits, c.ls_logits));
}
