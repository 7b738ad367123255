// Optimizer, schedule, dropout, checkpoint and S4D recurrence behavior.

#include <doctest.h>

#include <complex>
#include <cstdio>
#include <filesystem>

#include "echolab/nn/checkpoint.hpp"
#include "echolab/nn/layers.hpp"
#include "echolab/nn/lstm.hpp"
#include "echolab/nn/optim.hpp"
#include "echolab/nn/s4d.hpp"
#include "helpers.hpp"

using namespace echolab;
using namespace testutil;
namespace fs = std::filesystem;

TEST_CASE("adam matches a scalar reference") {
  nn::Param<double> p;
  p.init("w", {3});
  p.value.at(0) = 0.5;
  p.value.at(1) = -1.25;
  p.value.at(2) = 2.0;
  nn::Adam<double> adam;
  adam.lr = 0.01;

  double ref[3] = {0.5, -1.25, 2.0};
  double m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
  Pcg32 rng(5);
  for (int t = 1; t <= 7; ++t) {
    double g[3];
    for (int i = 0; i < 3; ++i) {
      g[i] = rng.uniform(-1.0, 1.0);
      p.grad.at(i) = g[i];
    }
    adam.step({&p});
    for (int i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mhat = m[i] / (1.0 - std::pow(0.9, t));
      const double vhat = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
      CHECK(p.value.at(i) == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
  CHECK(adam.step_count() == 7);
}

TEST_CASE("adam rejects NaN gradients") {
  nn::Param<float> p;
  p.init("w", {2});
  p.grad.at(0) = std::numeric_limits<float>::quiet_NaN();
  nn::Adam<float> adam;
  CHECK_THROWS_AS(adam.step({&p}), NumericError);
}

TEST_CASE("plateau schedule halves and stops") {
  nn::PlateauSchedule sched(1.0, 2, 5);
  CHECK_FALSE(sched.observe(10.0));  // new best
  CHECK_FALSE(sched.observe(11.0));  // bad 1
  CHECK_FALSE(sched.observe(12.0));  // bad 2 -> halve
  CHECK(sched.lr() == doctest::Approx(0.5));
  CHECK_FALSE(sched.observe(9.0));  // improvement resets everything
  CHECK(sched.lr() == doctest::Approx(0.5));
  bool stopped = false;
  for (int i = 0; i < 5; ++i) stopped = sched.observe(9.5);
  CHECK(stopped);
  CHECK(sched.lr() == doctest::Approx(0.125));  // two more halvings on the way
}

TEST_CASE("dropout is identity in eval and rescales in train") {
  Pcg32 rng(99);
  nn::Dropout<double> drop(0.25);
  auto x = random_tensor({4, 50, 10}, rng);
  nn::Tensor<double> eval_y = drop.forward(x, false, rng);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(eval_y[i] == x[i]);

  nn::Tensor<double> y = drop.forward(x, true, rng);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (y[i] == 0.0)
      ++zeros;
    else
      CHECK(y[i] == doctest::Approx(x[i] / 0.75));
  }
  const double frac = static_cast<double>(zeros) / static_cast<double>(x.numel());
  CHECK(frac > 0.2);
  CHECK(frac < 0.3);

  // backward reuses the exact mask
  auto dy = random_tensor({4, 50, 10}, rng);
  nn::Tensor<double> dx = drop.backward(dy);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (y[i] == 0.0)
      CHECK(dx[i] == 0.0);
    else
      CHECK(dx[i] == doctest::Approx(dy[i] / 0.75));
  }
}

TEST_CASE("s4d recurrence matches a complex-arithmetic oracle") {
  Pcg32 rng(31);
  nn::S4dBlock<double> s4d("s", 2, 4, rng);
  const int tlen = 12, f = 3;
  auto x = random_tensor({2, tlen, f}, rng);
  const nn::Tensor<double> y = s4d.forward(x, false);

  for (int ch = 0; ch < 2; ++ch) {
    std::vector<std::complex<double>> c(4);
    for (int k = 0; k < 4; ++k)
      c[static_cast<std::size_t>(k)] = {s4d.c_re().value.at(ch, k), s4d.c_im().value.at(ch, k)};
    const double dv = s4d.d().value.at(ch);
    for (int j = 0; j < f; ++j) {
      std::vector<std::complex<double>> state(4, {0.0, 0.0});
      for (int t = 0; t < tlen; ++t) {
        const double xv = x.at(ch, t, j);
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          state[static_cast<std::size_t>(k)] =
              s4d.abar(ch, k) * state[static_cast<std::size_t>(k)] + s4d.bbar(ch, k) * xv;
          acc += (c[static_cast<std::size_t>(k)] * state[static_cast<std::size_t>(k)]).real();
        }
        CHECK(y.at(ch, t, j) == doctest::Approx(acc + dv * xv).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("s4d discretization is zero-order hold") {
  Pcg32 rng(32);
  nn::S4dBlock<double> s4d("s", 1, 3, rng);
  s4d.rediscretize();
  const double dt = std::exp(s4d.log_dt().value.at(0));
  for (int k = 0; k < 3; ++k) {
    const std::complex<double> lam(s4d.lam_re().value.at(0, k), s4d.lam_im().value.at(0, k));
    const std::complex<double> a = std::exp(lam * dt);
    CHECK(std::abs(s4d.abar(0, k) - a) < 1e-12);
    CHECK(std::abs(s4d.bbar(0, k) - (a - 1.0) / lam) < 1e-12);
    CHECK(std::abs(s4d.abar(0, k)) < 1.0);  // stable pole at init
  }
  CHECK(s4d.clamp_warnings() == 0);
}

TEST_CASE("s4d clamps poles that leave the unit disc") {
  Pcg32 rng(33);
  nn::S4dBlock<double> s4d("s", 1, 2, rng);
  s4d.lam_re().value.at(0, 0) = 50.0;  // exp(50 dt) > 1 for any dt in the init range
  s4d.rediscretize();
  CHECK(s4d.clamp_warnings() > 0);
  CHECK(std::abs(s4d.abar(0, 0)) < 1.0);
  CHECK(std::abs(s4d.abar(0, 0)) > 1.0 - 1e-5);
}

TEST_CASE("checkpoint round-trip with moments") {
  Pcg32 rng(44);
  nn::TChLstm<float> a("m.lstm", 3, 4, rng);
  nn::LinearChannel<float> b("m.proj", 4, 3, rng);
  auto params = a.params();
  for (auto* p : b.params()) params.push_back(p);

  // fabricate moments as if a few Adam steps had run
  for (auto* p : params) {
    p->m = nn::Tensor<float>(p->value.shape());
    p->v = nn::Tensor<float>(p->value.shape());
    for (std::size_t i = 0; i < p->m.numel(); ++i) {
      p->m[i] = static_cast<float>(rng.uniform(-0.1, 0.1));
      p->v[i] = static_cast<float>(rng.uniform(0.0, 0.01));
    }
  }

  const fs::path path = fs::temp_directory_path() / "echolab_test_ckpt.bin";
  nn::save_checkpoint(path.string(), params, R"({"stage":"test","epochs_run":3})", true, 123);

  nn::TChLstm<float> a2("m.lstm", 3, 4, rng);
  nn::LinearChannel<float> b2("m.proj", 4, 3, rng);
  auto params2 = a2.params();
  for (auto* p : b2.params()) params2.push_back(p);
  const nn::CheckpointInfo info = nn::load_checkpoint(path.string(), params2);

  CHECK(info.has_moments);
  CHECK(info.adam_step == 123);
  CHECK(info.meta_json.find("\"stage\":\"test\"") != std::string::npos);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i]->value.numel(); ++k) {
      CHECK(params2[i]->value[k] == params[i]->value[k]);
      CHECK(params2[i]->m[k] == params[i]->m[k]);
      CHECK(params2[i]->v[k] == params[i]->v[k]);
    }
  }

  const nn::CheckpointInfo peek = nn::peek_checkpoint(path.string());
  CHECK(peek.adam_step == 123);
  CHECK(peek.has_moments);

  // a foreign layout is rejected, not silently misloaded
  nn::LinearChannel<float> c("other.proj", 4, 3, rng);
  auto wrong = c.params();
  CHECK_THROWS_AS(nn::load_checkpoint(path.string(), wrong), ProtocolError);
  fs::remove(path);
}

TEST_CASE("nan guard rejects non-finite activations when enabled") {
  Pcg32 rng(55);
  nn::LinearChannel<float> lin("g", 2, 2, rng);
  nn::Tensor<float> x({2, 1, 3});
  x[0] = std::numeric_limits<float>::infinity();
  nn::nan_guard() = true;
  CHECK_THROWS_AS(lin.forward(x, false), NumericError);
  nn::nan_guard() = false;
  CHECK_NOTHROW(lin.forward(x, false));
}
