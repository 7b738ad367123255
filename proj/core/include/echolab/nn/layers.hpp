#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "echolab/nn/tensor.hpp"
#include "echolab/rng.hpp"

namespace echolab::nn {

// Optional runtime guard: when on, layers reject non-finite outputs.
inline bool& nan_guard() {
  static bool on = false;
  return on;
}

template <typename T>
void guard_finite(const Tensor<T>& t, const char* where) {
  if (nan_guard() && !t.all_finite())
    throw NumericError(std::string("non-finite values after ") + where);
}

// A named parameter tensor with its gradient and Adam moment slots. Moments
// are sized on the first optimizer step and travel with checkpoints.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;
  Tensor<T> v;

  void init(std::string n, std::vector<int> shape) {
    name = std::move(n);
    value = Tensor<T>(shape);
    grad = Tensor<T>(std::move(shape));
  }
  void zero_grad() { grad.zero(); }
  std::size_t count() const { return value.numel(); }
};

template <typename T>
void fill_uniform(Tensor<T>& t, Pcg32& rng, double bound) {
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------
// Causal 3x3 Conv2D over C x T x F: left pad 2 on time, symmetric pad 1 on
// frequency. step() mirrors forward() tap order exactly so streaming and
// batch runs agree bit for bit.
template <typename T>
class Conv2dCausal {
 public:
  Conv2dCausal() = default;
  Conv2dCausal(const std::string& name, int cin, int cout, Pcg32& rng) : cin_(cin), cout_(cout) {
    w_.init(name + ".w", {cout, cin, 3, 3});
    b_.init(name + ".b", {cout});
    const double bound = 1.0 / std::sqrt(9.0 * cin);
    fill_uniform(w_.value, rng, bound);
    fill_uniform(b_.value, rng, bound);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == cin_, "conv2d: bad input shape");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> y({cout_, tlen, f});
    std::vector<const T*> xm2(static_cast<std::size_t>(cin_)),
        xm1(static_cast<std::size_t>(cin_)), xc(static_cast<std::size_t>(cin_));
    std::vector<T*> yrow(static_cast<std::size_t>(cout_));
    for (int t = 0; t < tlen; ++t) {
      for (int c = 0; c < cin_; ++c) {
        xm2[static_cast<std::size_t>(c)] = t >= 2 ? &x.at(c, t - 2, 0) : nullptr;
        xm1[static_cast<std::size_t>(c)] = t >= 1 ? &x.at(c, t - 1, 0) : nullptr;
        xc[static_cast<std::size_t>(c)] = &x.at(c, t, 0);
      }
      for (int c = 0; c < cout_; ++c) yrow[static_cast<std::size_t>(c)] = &y.at(c, t, 0);
      frame_conv(xm2.data(), xm1.data(), xc.data(), yrow.data(), f);
    }
    if (train) cached_x_ = x;
    guard_finite(y, "conv2d");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = cached_x_;
    require(x.numel() > 0, "conv2d: backward before forward");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> dx = Tensor<T>::like(x);
    for (int co = 0; co < cout_; ++co) {
      double db = 0.0;
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) db += dy.at(co, t, j);
      b_.grad.at(co) += static_cast<T>(db);
      for (int ci = 0; ci < cin_; ++ci) {
        for (int kt = 0; kt < 3; ++kt) {
          for (int kf = 0; kf < 3; ++kf) {
            const int dt = kt - 2, df = kf - 1;
            double dw = 0.0;
            for (int t = std::max(0, -dt); t < tlen; ++t) {
              const int ts = t + dt;
              if (ts >= tlen) break;
              const T* xr = &x.at(ci, ts, 0);
              const T* gr = &dy.at(co, t, 0);
              T* dxr = &dx.at(ci, ts, 0);
              const T wv = w_.value.at(co, ci, kt, kf);
              const int j0 = std::max(0, -df), j1 = std::min(f, f - df);
              for (int j = j0; j < j1; ++j) {
                dw += static_cast<double>(gr[j]) * xr[j + df];
                dxr[j + df] += wv * gr[j];
              }
            }
            w_.grad.at(co, ci, kt, kf) += static_cast<T>(dw);
          }
        }
      }
    }
    return dx;
  }

  // Streaming: feed one Cin x F frame, get one Cout x F frame.
  Tensor<T> step(const Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == cin_, "conv2d step: bad frame shape");
    const int f = frame.dim(1);
    if (ring_fill_ == 0) {
      ring_[0] = Tensor<T>({cin_, f});
      ring_[1] = Tensor<T>({cin_, f});
    }
    Tensor<T> y({cout_, f});
    std::vector<const T*> xm2(static_cast<std::size_t>(cin_)),
        xm1(static_cast<std::size_t>(cin_)), xc(static_cast<std::size_t>(cin_));
    std::vector<T*> yrow(static_cast<std::size_t>(cout_));
    const Tensor<T>* p1 = ring_fill_ >= 1 ? &ring_[1 - ring_pos_] : nullptr;
    const Tensor<T>* p2 = ring_fill_ >= 2 ? &ring_[ring_pos_] : nullptr;
    for (int c = 0; c < cin_; ++c) {
      xm2[static_cast<std::size_t>(c)] = p2 ? &p2->at(c, 0) : nullptr;
      xm1[static_cast<std::size_t>(c)] = p1 ? &p1->at(c, 0) : nullptr;
      xc[static_cast<std::size_t>(c)] = &frame.at(c, 0);
    }
    for (int c = 0; c < cout_; ++c) yrow[static_cast<std::size_t>(c)] = &y.at(c, 0);
    frame_conv(xm2.data(), xm1.data(), xc.data(), yrow.data(), f);
    ring_[ring_pos_] = frame;
    ring_pos_ = 1 - ring_pos_;
    if (ring_fill_ < 2) ++ring_fill_;
    return y;
  }

  void reset_stream() {
    ring_fill_ = 0;
    ring_pos_ = 0;
  }

  std::vector<Param<T>*> params() { return {&w_, &b_}; }
  long param_count() const { return static_cast<long>(w_.count() + b_.count()); }
  long macs_per_frame(int f_bins) const { return 9L * cin_ * cout_ * f_bins; }
  int out_channels() const { return cout_; }

 private:
  void frame_conv(const T* const* xm2, const T* const* xm1, const T* const* xc, T* const* yrow,
                  int f) const {
    for (int co = 0; co < cout_; ++co) {
      T* y = yrow[co];
      const T bias = b_.value.at(co);
      for (int j = 0; j < f; ++j) y[j] = bias;
      for (int ci = 0; ci < cin_; ++ci) {
        for (int kt = 0; kt < 3; ++kt) {
          const T* xs = (kt == 0 ? xm2 : kt == 1 ? xm1 : xc)[ci];
          if (!xs) continue;
          for (int kf = 0; kf < 3; ++kf) {
            const T wv = w_.value.at(co, ci, kt, kf);
            const int df = kf - 1;
            const int j0 = std::max(0, -df), j1 = std::min(f, f - df);
            for (int j = j0; j < j1; ++j) y[j] += wv * xs[j + df];
          }
        }
      }
    }
  }

  int cin_ = 0, cout_ = 0;
  Param<T> w_, b_;
  Tensor<T> cached_x_;
  Tensor<T> ring_[2];
  int ring_pos_ = 0;
  int ring_fill_ = 0;
};

// ---------------------------------------------------------------------------
// LayerNorm over the channel axis per (t, f) position, affine per (c, f).
template <typename T>
class LayerNormCF {
 public:
  LayerNormCF() = default;
  LayerNormCF(const std::string& name, int channels, int f_bins) : c_(channels), f_(f_bins) {
    gamma_.init(name + ".gamma", {channels, f_bins});
    beta_.init(name + ".beta", {channels, f_bins});
    for (std::size_t i = 0; i < gamma_.value.numel(); ++i) gamma_.value[i] = T(1);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == c_ && x.dim(2) == f_, "layernorm: bad input shape");
    const int tlen = x.dim(1);
    Tensor<T> y = Tensor<T>::like(x);
    Tensor<T> xhat = Tensor<T>::like(x);
    Tensor<T> istd({tlen, f_});
    for (int t = 0; t < tlen; ++t) {
      for (int j = 0; j < f_; ++j) {
        T mean, inv;
        column_stats(x, t, j, mean, inv);
        istd.at(t, j) = inv;
        for (int c = 0; c < c_; ++c) {
          const T h = (x.at(c, t, j) - mean) * inv;
          xhat.at(c, t, j) = h;
          y.at(c, t, j) = gamma_.value.at(c, j) * h + beta_.value.at(c, j);
        }
      }
    }
    if (train) {
      cached_xhat_ = std::move(xhat);
      cached_istd_ = std::move(istd);
    }
    guard_finite(y, "layernorm");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& xhat = cached_xhat_;
    require(xhat.numel() > 0, "layernorm: backward before forward");
    const int tlen = xhat.dim(1);
    Tensor<T> dx = Tensor<T>::like(xhat);
    for (int t = 0; t < tlen; ++t) {
      for (int j = 0; j < f_; ++j) {
        T sum_g = T(0), sum_gh = T(0);
        for (int c = 0; c < c_; ++c) {
          const T g = dy.at(c, t, j) * gamma_.value.at(c, j);
          sum_g += g;
          sum_gh += g * xhat.at(c, t, j);
          gamma_.grad.at(c, j) += dy.at(c, t, j) * xhat.at(c, t, j);
          beta_.grad.at(c, j) += dy.at(c, t, j);
        }
        const T inv = cached_istd_.at(t, j);
        const T mg = sum_g / static_cast<T>(c_);
        const T mgh = sum_gh / static_cast<T>(c_);
        for (int c = 0; c < c_; ++c) {
          const T g = dy.at(c, t, j) * gamma_.value.at(c, j);
          dx.at(c, t, j) = (g - mg - xhat.at(c, t, j) * mgh) * inv;
        }
      }
    }
    return dx;
  }

  Tensor<T> step(const Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == c_ && frame.dim(1) == f_,
            "layernorm step: bad frame shape");
    Tensor<T> y = Tensor<T>::like(frame);
    for (int j = 0; j < f_; ++j) {
      T mean, inv;
      frame_stats(frame, j, mean, inv);
      for (int c = 0; c < c_; ++c)
        y.at(c, j) = gamma_.value.at(c, j) * ((frame.at(c, j) - mean) * inv) +
                     beta_.value.at(c, j);
    }
    return y;
  }

  std::vector<Param<T>*> params() { return {&gamma_, &beta_}; }
  long param_count() const { return 2L * c_ * f_; }
  long macs_per_frame(int) const { return 4L * c_ * f_; }

 private:
  void column_stats(const Tensor<T>& x, int t, int j, T& mean, T& inv) const {
    T s = T(0);
    for (int c = 0; c < c_; ++c) s += x.at(c, t, j);
    mean = s / static_cast<T>(c_);
    T var = T(0);
    for (int c = 0; c < c_; ++c) {
      const T d = x.at(c, t, j) - mean;
      var += d * d;
    }
    var /= static_cast<T>(c_);
    inv = T(1) / std::sqrt(var + static_cast<T>(kEps));
  }
  void frame_stats(const Tensor<T>& x, int j, T& mean, T& inv) const {
    T s = T(0);
    for (int c = 0; c < c_; ++c) s += x.at(c, j);
    mean = s / static_cast<T>(c_);
    T var = T(0);
    for (int c = 0; c < c_; ++c) {
      const T d = x.at(c, j) - mean;
      var += d * d;
    }
    var /= static_cast<T>(c_);
    inv = T(1) / std::sqrt(var + static_cast<T>(kEps));
  }

  static constexpr double kEps = 1e-5;
  int c_ = 0, f_ = 0;
  Param<T> gamma_, beta_;
  Tensor<T> cached_xhat_;
  Tensor<T> cached_istd_;
};

// ---------------------------------------------------------------------------
// ELU activation (alpha = 1).
template <typename T>
class Elu {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> y = Tensor<T>::like(x);
    for (std::size_t i = 0; i < x.numel(); ++i)
      y[i] = x[i] > T(0) ? x[i] : static_cast<T>(std::expm1(static_cast<double>(x[i])));
    if (train) cached_y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = Tensor<T>::like(dy);
    for (std::size_t i = 0; i < dy.numel(); ++i)
      dx[i] = dy[i] * (cached_y_[i] > T(0) ? T(1) : cached_y_[i] + T(1));
    return dx;
  }
  Tensor<T> step(const Tensor<T>& frame) { return forward(frame, false); }

 private:
  Tensor<T> cached_y_;
};

// ---------------------------------------------------------------------------
// 1x1 linear map over the channel axis of a C x T x F tensor.
template <typename T>
class LinearChannel {
 public:
  LinearChannel() = default;
  LinearChannel(const std::string& name, int cin, int cout, Pcg32& rng)
      : cin_(cin), cout_(cout) {
    w_.init(name + ".w", {cout, cin});
    b_.init(name + ".b", {cout});
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin));
    fill_uniform(w_.value, rng, bound);
    fill_uniform(b_.value, rng, bound);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == cin_, "linear_channel: bad input shape");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> y({cout_, tlen, f});
    for (int t = 0; t < tlen; ++t) apply_frame(x, t, y);
    if (train) cached_x_ = x;
    guard_finite(y, "linear_channel");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = cached_x_;
    require(x.numel() > 0, "linear_channel: backward before forward");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> dx = Tensor<T>::like(x);
    for (int co = 0; co < cout_; ++co) {
      double db = 0.0;
      for (int t = 0; t < tlen; ++t) {
        const T* gr = &dy.at(co, t, 0);
        for (int j = 0; j < f; ++j) db += gr[j];
        for (int ci = 0; ci < cin_; ++ci) {
          const T* xr = &x.at(ci, t, 0);
          T* dxr = &dx.at(ci, t, 0);
          const T wv = w_.value.at(co, ci);
          double dw = 0.0;
          for (int j = 0; j < f; ++j) {
            dw += static_cast<double>(gr[j]) * xr[j];
            dxr[j] += wv * gr[j];
          }
          w_.grad.at(co, ci) += static_cast<T>(dw);
        }
      }
      b_.grad.at(co) += static_cast<T>(db);
    }
    return dx;
  }

  Tensor<T> step(const Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == cin_, "linear_channel step: bad frame shape");
    const int f = frame.dim(1);
    Tensor<T> y({cout_, f});
    for (int co = 0; co < cout_; ++co) {
      T* yr = &y.at(co, 0);
      const T bias = b_.value.at(co);
      for (int j = 0; j < f; ++j) yr[j] = bias;
      for (int ci = 0; ci < cin_; ++ci) {
        const T wv = w_.value.at(co, ci);
        const T* xr = &frame.at(ci, 0);
        for (int j = 0; j < f; ++j) yr[j] += wv * xr[j];
      }
    }
    return y;
  }

  std::vector<Param<T>*> params() { return {&w_, &b_}; }
  long param_count() const { return static_cast<long>(w_.count() + b_.count()); }
  long macs_per_frame(int f_bins) const { return static_cast<long>(cin_) * cout_ * f_bins; }

 private:
  void apply_frame(const Tensor<T>& x, int t, Tensor<T>& y) const {
    const int f = x.dim(2);
    for (int co = 0; co < cout_; ++co) {
      T* yr = &y.at(co, t, 0);
      const T bias = b_.value.at(co);
      for (int j = 0; j < f; ++j) yr[j] = bias;
      for (int ci = 0; ci < cin_; ++ci) {
        const T wv = w_.value.at(co, ci);
        const T* xr = &x.at(ci, t, 0);
        for (int j = 0; j < f; ++j) yr[j] += wv * xr[j];
      }
    }
  }

  int cin_ = 0, cout_ = 0;
  Param<T> w_, b_;
  Tensor<T> cached_x_;
};

// ---------------------------------------------------------------------------
// Dense layer over the last axis of a T x A tensor (used by the DOA heads).
template <typename T>
class LinearLastAxis {
 public:
  LinearLastAxis() = default;
  LinearLastAxis(const std::string& name, int in_dim, int out_dim, Pcg32& rng)
      : in_(in_dim), out_(out_dim) {
    wt_.init(name + ".w", {in_dim, out_dim});  // transposed layout for row-major axpy
    b_.init(name + ".b", {out_dim});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    fill_uniform(wt_.value, rng, bound);
    fill_uniform(b_.value, rng, bound);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 2 && x.dim(1) == in_, "linear: bad input shape");
    const int rows = x.dim(0);
    Tensor<T> y({rows, out_});
    for (int r = 0; r < rows; ++r) row_apply(&x.at(r, 0), &y.at(r, 0));
    if (train) cached_x_ = x;
    guard_finite(y, "linear");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = cached_x_;
    require(x.numel() > 0, "linear: backward before forward");
    const int rows = x.dim(0);
    Tensor<T> dx = Tensor<T>::like(x);
    for (int r = 0; r < rows; ++r) {
      const T* g = &dy.at(r, 0);
      const T* xr = &x.at(r, 0);
      T* dxr = &dx.at(r, 0);
      for (int k = 0; k < out_; ++k) b_.grad.at(k) += g[k];
      for (int i = 0; i < in_; ++i) {
        T* dwr = &wt_.grad.at(i, 0);
        const T* wr = &wt_.value.at(i, 0);
        const T xv = xr[i];
        T acc = T(0);
        for (int k = 0; k < out_; ++k) {
          dwr[k] += xv * g[k];
          acc += wr[k] * g[k];
        }
        dxr[i] = acc;
      }
    }
    return dx;
  }

  // One row in, one row out (frame-online path).
  Tensor<T> step(const Tensor<T>& row) {
    require(row.rank() == 1 && row.dim(0) == in_, "linear step: bad row shape");
    Tensor<T> y({out_});
    row_apply(&row.at(0), &y.at(0));
    return y;
  }

  std::vector<Param<T>*> params() { return {&wt_, &b_}; }
  long param_count() const { return static_cast<long>(wt_.count() + b_.count()); }
  long macs_per_frame(int) const { return static_cast<long>(in_) * out_; }

 private:
  void row_apply(const T* xr, T* yr) const {
    for (int k = 0; k < out_; ++k) yr[k] = b_.value.at(k);
    for (int i = 0; i < in_; ++i) {
      const T xv = xr[i];
      const T* wr = &wt_.value.at(i, 0);
      for (int k = 0; k < out_; ++k) yr[k] += xv * wr[k];
    }
  }

  int in_ = 0, out_ = 0;
  Param<T> wt_, b_;
  Tensor<T> cached_x_;
};

// ---------------------------------------------------------------------------
// Inverted dropout; identity in eval mode.
template <typename T>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double p) : p_(p) { require(p >= 0.0 && p < 1.0, "dropout: bad ratio"); }

  Tensor<T> forward(const Tensor<T>& x, bool train, Pcg32& rng) {
    if (!train || p_ == 0.0) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - p_));
    mask_ = Tensor<T>::like(x);
    Tensor<T> y = Tensor<T>::like(x);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const T m = rng.uniform() >= p_ ? scale : T(0);
      mask_[i] = m;
      y[i] = x[i] * m;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    if (mask_.numel() == 0) return dy;
    Tensor<T> dx = Tensor<T>::like(dy);
    for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
  }

  void clear() { mask_ = Tensor<T>(); }
  double ratio() const { return p_; }

 private:
  double p_ = 0.0;
  Tensor<T> mask_;
};

// ---------------------------------------------------------------------------
// Pointwise activations used at network outputs.
template <typename T>
inline Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::like(x);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = static_cast<double>(x[i]);
    y[i] = static_cast<T>(v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                 : std::exp(v) / (1.0 + std::exp(v)));
  }
  return y;
}

template <typename T>
inline Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx = Tensor<T>::like(dy);
  for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
  return dx;
}

template <typename T>
inline Tensor<T> tanh_act(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::like(x);
  for (std::size_t i = 0; i < x.numel(); ++i)
    y[i] = static_cast<T>(std::tanh(static_cast<double>(x[i])));
  return y;
}

template <typename T>
inline Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx = Tensor<T>::like(dy);
  for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
  return dx;
}

// Softmax over the last axis of any tensor (treated as rows).
template <typename T>
inline Tensor<T> softmax_lastaxis(const Tensor<T>& x) {
  require(x.rank() >= 1, "softmax: empty tensor");
  const int n = x.dim(x.rank() - 1);
  require(n > 0, "softmax: empty axis");
  Tensor<T> y = Tensor<T>::like(x);
  const std::size_t rows = x.numel() / static_cast<std::size_t>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * static_cast<std::size_t>(n);
    T* yr = y.data() + r * static_cast<std::size_t>(n);
    T mx = xr[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, xr[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(static_cast<double>(xr[i] - mx));
      yr[i] = static_cast<T>(e);
      sum += e;
    }
    for (int i = 0; i < n; ++i) yr[i] = static_cast<T>(yr[i] / sum);
  }
  return y;
}

template <typename T>
inline Tensor<T> softmax_lastaxis_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  const int n = y.dim(y.rank() - 1);
  Tensor<T> dx = Tensor<T>::like(y);
  const std::size_t rows = y.numel() / static_cast<std::size_t>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = y.data() + r * static_cast<std::size_t>(n);
    const T* gr = dy.data() + r * static_cast<std::size_t>(n);
    T* dr = dx.data() + r * static_cast<std::size_t>(n);
    T dot = T(0);
    for (int i = 0; i < n; ++i) dot += yr[i] * gr[i];
    for (int i = 0; i < n; ++i) dr[i] = yr[i] * (gr[i] - dot);
  }
  return dx;
}

}  // namespace echolab::nn
