// Finite-difference gradient checks for every layer and both losses, run in
// double precision on several random shapes each. The tolerance matches the
// project-wide bar of 1e-4 maximum relative error.

#include <doctest.h>

#include <functional>

#include "echolab/nn/layers.hpp"
#include "echolab/nn/losses.hpp"
#include "echolab/nn/lstm.hpp"
#include "echolab/nn/s4d.hpp"
#include "helpers.hpp"

using namespace echolab;
using namespace testutil;

namespace {

constexpr double kTol = 1e-4;
constexpr int kShapes = 5;

// Runs the standard drill for a layer object: forward caches, backward fills
// parameter grads and returns dx, then every parameter element and every
// input element is FD-checked against the weighted-sum loss.
template <typename Layer>
FdReport check_layer(Layer& layer, nn::Tensor<double>& x, const nn::Tensor<double>& dy) {
  for (auto* p : layer.params()) p->zero_grad();
  nn::Tensor<double> y = layer.forward(x, true);
  nn::Tensor<double> dx = layer.backward(dy);

  const auto loss = [&]() { return weighted_sum(layer.forward(x, true), dy); };
  FdReport rep;
  for (auto* p : layer.params()) fd_check_param(*p, loss, rep);
  fd_check_values(x, dx, loss, "input", rep);
  return rep;
}

}  // namespace

TEST_CASE("conv2d_causal gradients") {
  Pcg32 rng(101);
  for (int s = 0; s < kShapes; ++s) {
    const int cin = rng.uniform_int(1, 4), cout = rng.uniform_int(1, 4);
    const int t = rng.uniform_int(1, 6), f = rng.uniform_int(2, 8);
    nn::Conv2dCausal<double> conv("c", cin, cout, rng);
    auto x = random_tensor({cin, t, f}, rng);
    auto dy = random_tensor({cout, t, f}, rng);
    const FdReport rep = check_layer(conv, x, dy);
    INFO("shape ", s, " worst ", rep.worst_name, " analytic ", rep.worst_analytic, " fd ",
         rep.worst_fd);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("t-chlstm gradients") {
  Pcg32 rng(102);
  for (int s = 0; s < kShapes; ++s) {
    const int in = rng.uniform_int(1, 4), h = rng.uniform_int(1, 5);
    const int t = rng.uniform_int(2, 6), f = rng.uniform_int(1, 6);
    nn::TChLstm<double> lstm("l", in, h, rng);
    auto x = random_tensor({in, t, f}, rng);
    auto dy = random_tensor({h, t, f}, rng);
    const FdReport rep = check_layer(lstm, x, dy);
    INFO("shape ", s, " worst ", rep.worst_name);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("layernorm gradients") {
  Pcg32 rng(103);
  for (int s = 0; s < kShapes; ++s) {
    const int c = rng.uniform_int(2, 6), t = rng.uniform_int(1, 5), f = rng.uniform_int(1, 6);
    nn::LayerNormCF<double> ln("n", c, f);
    // keep the affine away from the identity so the grads are generic
    for (auto* p : ln.params())
      for (std::size_t i = 0; i < p->value.numel(); ++i) p->value[i] += rng.uniform(-0.3, 0.3);
    auto x = random_tensor({c, t, f}, rng);
    auto dy = random_tensor({c, t, f}, rng);
    const FdReport rep = check_layer(ln, x, dy);
    INFO("shape ", s, " worst ", rep.worst_name);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("linear_channel gradients") {
  Pcg32 rng(104);
  for (int s = 0; s < kShapes; ++s) {
    const int cin = rng.uniform_int(1, 5), cout = rng.uniform_int(1, 5);
    const int t = rng.uniform_int(1, 5), f = rng.uniform_int(1, 7);
    nn::LinearChannel<double> lin("p", cin, cout, rng);
    auto x = random_tensor({cin, t, f}, rng);
    auto dy = random_tensor({cout, t, f}, rng);
    const FdReport rep = check_layer(lin, x, dy);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("linear_lastaxis gradients") {
  Pcg32 rng(105);
  for (int s = 0; s < kShapes; ++s) {
    const int in = rng.uniform_int(1, 8), out = rng.uniform_int(1, 8);
    const int rows = rng.uniform_int(1, 6);
    nn::LinearLastAxis<double> lin("h", in, out, rng);
    auto x = random_tensor({rows, in}, rng);
    auto dy = random_tensor({rows, out}, rng);
    const FdReport rep = check_layer(lin, x, dy);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("elu gradients") {
  Pcg32 rng(106);
  for (int s = 0; s < kShapes; ++s) {
    const int c = rng.uniform_int(1, 4), t = rng.uniform_int(1, 5), f = rng.uniform_int(1, 6);
    nn::Elu<double> elu;
    auto x = random_tensor({c, t, f}, rng, 2.0);
    auto dy = random_tensor({c, t, f}, rng);
    elu.forward(x, true);
    const nn::Tensor<double> dx = elu.backward(dy);
    const auto loss = [&]() { return weighted_sum(elu.forward(x, true), dy); };
    FdReport rep;
    fd_check_values(x, dx, loss, "input", rep);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("sigmoid gradients") {
  Pcg32 rng(107);
  for (int s = 0; s < kShapes; ++s) {
    const int rows = rng.uniform_int(1, 5), n = rng.uniform_int(1, 8);
    auto x = random_tensor({rows, n}, rng, 3.0);
    auto dy = random_tensor({rows, n}, rng);
    const nn::Tensor<double> y = nn::sigmoid(x);
    const nn::Tensor<double> dx = nn::sigmoid_backward(y, dy);
    const auto loss = [&]() { return weighted_sum(nn::sigmoid(x), dy); };
    FdReport rep;
    fd_check_values(x, dx, loss, "input", rep);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("softmax gradients") {
  Pcg32 rng(108);
  for (int s = 0; s < kShapes; ++s) {
    const int rows = rng.uniform_int(1, 5), n = rng.uniform_int(2, 8);
    auto x = random_tensor({rows, n}, rng, 3.0);
    auto dy = random_tensor({rows, n}, rng);
    const nn::Tensor<double> y = nn::softmax_lastaxis(x);
    const nn::Tensor<double> dx = nn::softmax_lastaxis_backward(y, dy);
    const auto loss = [&]() { return weighted_sum(nn::softmax_lastaxis(x), dy); };
    FdReport rep;
    fd_check_values(x, dx, loss, "input", rep);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("s4d gradients") {
  Pcg32 rng(109);
  for (int s = 0; s < kShapes; ++s) {
    const int c = rng.uniform_int(1, 3), n = rng.uniform_int(1, 6);
    const int t = rng.uniform_int(2, 6), f = rng.uniform_int(1, 5);
    nn::S4dBlock<double> s4d("s", c, n, rng);
    auto x = random_tensor({c, t, f}, rng);
    auto dy = random_tensor({c, t, f}, rng);
    const FdReport rep = check_layer(s4d, x, dy);
    INFO("shape ", s, " worst ", rep.worst_name, " analytic ", rep.worst_analytic, " fd ",
         rep.worst_fd);
    CHECK(rep.max_rel < kTol);
    CHECK(s4d.clamp_warnings() == 0);
  }
}

TEST_CASE("bce_with_logits gradients") {
  Pcg32 rng(110);
  for (int s = 0; s < kShapes; ++s) {
    const int t = rng.uniform_int(1, 5), d = rng.uniform_int(1, 6);
    auto logits = random_tensor({t, d, 2}, rng, 3.0);
    nn::Tensor<double> targets({t, d, 2});
    for (std::size_t i = 0; i < targets.numel(); ++i)
      targets[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const auto res = nn::bce_with_logits(logits, targets);
    const auto loss = [&]() { return nn::bce_with_logits(logits, targets).loss; };
    FdReport rep;
    fd_check_values(logits, res.grad, loss, "logits", rep);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("ri_mag_loss gradients") {
  Pcg32 rng(111);
  for (int s = 0; s < kShapes; ++s) {
    const int t = rng.uniform_int(1, 5), f = rng.uniform_int(1, 6);
    // keep magnitudes away from zero: the |.|^0.5 compression is not
    // differentiable at the origin and the implementation cuts the gradient
    auto make = [&]() {
      nn::Tensor<double> z({2, t, f});
      for (int tt = 0; tt < t; ++tt)
        for (int j = 0; j < f; ++j) {
          const double mag = rng.uniform(0.3, 1.5);
          const double ang = rng.uniform(0.0, 6.283185307179586);
          z.at(0, tt, j) = mag * std::cos(ang);
          z.at(1, tt, j) = mag * std::sin(ang);
        }
      return z;
    };
    auto pred = make();
    const auto target = make();
    const auto res = nn::ri_mag_loss(pred, target);
    const auto loss = [&]() { return nn::ri_mag_loss(pred, target).loss; };
    FdReport rep;
    fd_check_values(pred, res.grad, loss, "pred", rep);
    CHECK(rep.max_rel < kTol);
  }
}

TEST_CASE("loss domain checks") {
  nn::Tensor<double> a({2, 2, 2}), b({2, 2, 2});
  b[0] = 0.5;  // not a one-hot value
  CHECK_THROWS_AS(nn::bce_with_logits(a, b), DomainError);
  nn::Tensor<double> c({3, 2, 2});
  CHECK_THROWS_AS(nn::bce_with_logits(a, c), DomainError);
  CHECK_THROWS_AS(nn::ri_mag_loss(c, c), DomainError);  // first dim must be 2
  CHECK_THROWS_AS(nn::ri_mag_loss(a, a, 1.5), DomainError);
}
