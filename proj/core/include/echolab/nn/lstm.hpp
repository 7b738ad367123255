#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"
#include "echolab/nn/tensor.hpp"
#include "echolab/rng.hpp"

namespace echolab::nn {

// Sub-band time-dimension channel LSTM: one parameter set runs independently
// over the T axis of every frequency bin. Input C x T x F, output H x T x F.
// Weights are stored transposed ([in][4H]) so the gate accumulation is a
// contiguous axpy; gate order is i, f, g, o with the usual two bias vectors.
template <typename T>
class TChLstm {
 public:
  TChLstm() = default;
  TChLstm(const std::string& name, int input_dim, int hidden_dim, Pcg32& rng)
      : in_(input_dim), h_(hidden_dim) {
    wt_ih_.init(name + ".w_ih", {input_dim, 4 * hidden_dim});
    wt_hh_.init(name + ".w_hh", {hidden_dim, 4 * hidden_dim});
    b_ih_.init(name + ".b_ih", {4 * hidden_dim});
    b_hh_.init(name + ".b_hh", {4 * hidden_dim});
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    fill_uniform(wt_ih_.value, rng, bound);
    fill_uniform(wt_hh_.value, rng, bound);
    fill_uniform(b_ih_.value, rng, bound);
    fill_uniform(b_hh_.value, rng, bound);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == in_, "t-chlstm: bad input shape");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> y({h_, tlen, f});
    if (train) {
      cached_x_ = x;
      acts_ = Tensor<T>({f, tlen, 4 * h_});   // post-activation gates
      cell_ = Tensor<T>({f, tlen, 2 * h_});   // c_t then tanh(c_t)
    }
    std::vector<T> h(static_cast<std::size_t>(h_)), c(static_cast<std::size_t>(h_)),
        gates(static_cast<std::size_t>(4 * h_));
    for (int j = 0; j < f; ++j) {
      std::fill(h.begin(), h.end(), T(0));
      std::fill(c.begin(), c.end(), T(0));
      for (int t = 0; t < tlen; ++t) {
        cell_step(&x.at(0, t, j), static_cast<std::size_t>(tlen) * f, h.data(), c.data(),
                  gates.data());
        for (int k = 0; k < h_; ++k) y.at(k, t, j) = h[static_cast<std::size_t>(k)];
        if (train) {
          T* ga = &acts_.at(j, t, 0);
          for (int k = 0; k < 4 * h_; ++k) ga[k] = gates[static_cast<std::size_t>(k)];
          T* cc = &cell_.at(j, t, 0);
          for (int k = 0; k < h_; ++k) {
            cc[k] = c[static_cast<std::size_t>(k)];
            cc[h_ + k] = static_cast<T>(std::tanh(static_cast<double>(c[static_cast<std::size_t>(k)])));
          }
        }
      }
    }
    guard_finite(y, "t-chlstm");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = cached_x_;
    require(x.numel() > 0, "t-chlstm: backward before forward");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> dx = Tensor<T>::like(x);
    std::vector<T> dh(static_cast<std::size_t>(h_)), dc(static_cast<std::size_t>(h_)),
        dz(static_cast<std::size_t>(4 * h_)), hprev(static_cast<std::size_t>(h_));
    for (int j = 0; j < f; ++j) {
      std::fill(dh.begin(), dh.end(), T(0));
      std::fill(dc.begin(), dc.end(), T(0));
      for (int t = tlen - 1; t >= 0; --t) {
        const T* ga = &acts_.at(j, t, 0);  // i, f, g, o
        const T* cc = &cell_.at(j, t, 0);
        const T* cprev = t > 0 ? &cell_.at(j, t - 1, 0) : nullptr;
        if (t > 0) {
          const T* ga_prev = &acts_.at(j, t - 1, 0);
          for (int k = 0; k < h_; ++k)
            hprev[static_cast<std::size_t>(k)] = ga_prev[3 * h_ + k] * cprev[h_ + k];
        } else {
          std::fill(hprev.begin(), hprev.end(), T(0));
        }
        for (int k = 0; k < h_; ++k) {
          const T gi = ga[k], gf = ga[h_ + k], gg = ga[2 * h_ + k], go = ga[3 * h_ + k];
          const T tc = cc[h_ + k];
          const T dht = dh[static_cast<std::size_t>(k)] + dy.at(k, t, j);
          const T dct = dc[static_cast<std::size_t>(k)] + dht * go * (T(1) - tc * tc);
          const T cp = cprev ? cprev[k] : T(0);
          dz[static_cast<std::size_t>(k)] = dct * gg * gi * (T(1) - gi);
          dz[static_cast<std::size_t>(h_ + k)] = dct * cp * gf * (T(1) - gf);
          dz[static_cast<std::size_t>(2 * h_ + k)] = dct * gi * (T(1) - gg * gg);
          dz[static_cast<std::size_t>(3 * h_ + k)] = dht * tc * go * (T(1) - go);
          dc[static_cast<std::size_t>(k)] = dct * gf;
        }
        for (int k = 0; k < 4 * h_; ++k) {
          b_ih_.grad.at(k) += dz[static_cast<std::size_t>(k)];
          b_hh_.grad.at(k) += dz[static_cast<std::size_t>(k)];
        }
        const std::size_t stride = static_cast<std::size_t>(tlen) * f;
        const T* xt = &x.at(0, t, j);
        T* dxt = &dx.at(0, t, j);
        for (int i = 0; i < in_; ++i) {
          const T xv = xt[static_cast<std::size_t>(i) * stride];
          T* dwr = &wt_ih_.grad.at(i, 0);
          const T* wr = &wt_ih_.value.at(i, 0);
          T acc = T(0);
          for (int k = 0; k < 4 * h_; ++k) {
            dwr[k] += xv * dz[static_cast<std::size_t>(k)];
            acc += wr[k] * dz[static_cast<std::size_t>(k)];
          }
          dxt[static_cast<std::size_t>(i) * stride] = acc;
        }
        for (int k = 0; k < h_; ++k) dh[static_cast<std::size_t>(k)] = T(0);
        for (int i = 0; i < h_; ++i) {
          const T hv = hprev[static_cast<std::size_t>(i)];
          T* dwr = &wt_hh_.grad.at(i, 0);
          const T* wr = &wt_hh_.value.at(i, 0);
          T acc = T(0);
          for (int k = 0; k < 4 * h_; ++k) {
            dwr[k] += hv * dz[static_cast<std::size_t>(k)];
            acc += wr[k] * dz[static_cast<std::size_t>(k)];
          }
          dh[static_cast<std::size_t>(i)] = acc;
        }
      }
    }
    return dx;
  }

  // Streaming: one C x F frame in, one H x F frame out; state persists.
  Tensor<T> step(const Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == in_, "t-chlstm step: bad frame shape");
    const int f = frame.dim(1);
    if (state_h_.numel() == 0 || state_h_.dim(0) != f) {
      state_h_ = Tensor<T>({f, h_});
      state_c_ = Tensor<T>({f, h_});
    }
    Tensor<T> y({h_, f});
    std::vector<T> gates(static_cast<std::size_t>(4 * h_));
    for (int j = 0; j < f; ++j) {
      cell_step(&frame.at(0, j), static_cast<std::size_t>(f), &state_h_.at(j, 0),
                &state_c_.at(j, 0), gates.data());
      for (int k = 0; k < h_; ++k) y.at(k, j) = state_h_.at(j, k);
    }
    return y;
  }

  void reset_stream() {
    state_h_ = Tensor<T>();
    state_c_ = Tensor<T>();
  }

  std::vector<Param<T>*> params() { return {&wt_ih_, &wt_hh_, &b_ih_, &b_hh_}; }
  long param_count() const { return 4L * h_ * (in_ + h_) + 8L * h_; }
  long macs_per_frame(int f_bins) const { return 4L * h_ * (in_ + h_) * f_bins; }
  int hidden_dim() const { return h_; }

 private:
  // One cell update: x addressed with an arbitrary channel stride so batch
  // (C x T x F) and stream (C x F) layouts share the exact arithmetic.
  void cell_step(const T* x, std::size_t x_stride, T* h, T* c, T* gates) const {
    const int g4 = 4 * h_;
    for (int k = 0; k < g4; ++k) gates[k] = b_ih_.value.at(k) + b_hh_.value.at(k);
    for (int i = 0; i < in_; ++i) {
      const T xv = x[static_cast<std::size_t>(i) * x_stride];
      const T* wr = &wt_ih_.value.at(i, 0);
      for (int k = 0; k < g4; ++k) gates[k] += xv * wr[k];
    }
    for (int i = 0; i < h_; ++i) {
      const T hv = h[i];
      const T* wr = &wt_hh_.value.at(i, 0);
      for (int k = 0; k < g4; ++k) gates[k] += hv * wr[k];
    }
    for (int k = 0; k < h_; ++k) {
      const T gi = sig(gates[k]);
      const T gf = sig(gates[h_ + k]);
      const T gg = static_cast<T>(std::tanh(static_cast<double>(gates[2 * h_ + k])));
      const T go = sig(gates[3 * h_ + k]);
      c[k] = gf * c[k] + gi * gg;
      h[k] = go * static_cast<T>(std::tanh(static_cast<double>(c[k])));
      gates[k] = gi;
      gates[h_ + k] = gf;
      gates[2 * h_ + k] = gg;
      gates[3 * h_ + k] = go;
    }
  }

  static T sig(T v) {
    const double d = static_cast<double>(v);
    return static_cast<T>(d >= 0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d)));
  }

  int in_ = 0, h_ = 0;
  Param<T> wt_ih_, wt_hh_, b_ih_, b_hh_;
  Tensor<T> cached_x_;
  Tensor<T> acts_;   // F x T x 4H, gate activations
  Tensor<T> cell_;   // F x T x 2H, c_t and tanh(c_t)
  Tensor<T> state_h_;  // stream state, F x H
  Tensor<T> state_c_;
};

}  // namespace echolab::nn
