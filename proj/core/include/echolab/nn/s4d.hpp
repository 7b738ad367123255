#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"
#include "echolab/nn/tensor.hpp"
#include "echolab/rng.hpp"

namespace echolab::nn {

// Diagonal structured state-space block: per channel, a SISO complex SSM of
// state dim N is ZOH-discretized and run causally over the T axis, shared by
// all frequencies; skip path D*x keeps the map invertible at init. Poles are
// parametrized directly (lambda = lam_re + i*lam_im, S4D-Lin init) with a
// learnable log-timescale; a discretized pole that leaves the unit disc is
// clamped and counted, and its lambda/dt gradient path is cut for that step.
template <typename T>
class S4dBlock {
 public:
  S4dBlock() = default;
  S4dBlock(const std::string& name, int channels, int state_dim, Pcg32& rng)
      : c_(channels), n_(state_dim) {
    lam_re_.init(name + ".lam_re", {channels, state_dim});
    lam_im_.init(name + ".lam_im", {channels, state_dim});
    c_re_.init(name + ".c_re", {channels, state_dim});
    c_im_.init(name + ".c_im", {channels, state_dim});
    log_dt_.init(name + ".log_dt", {channels});
    d_.init(name + ".d", {channels});
    const double cscale = 1.0 / std::sqrt(static_cast<double>(state_dim));
    for (int ch = 0; ch < channels; ++ch) {
      for (int k = 0; k < state_dim; ++k) {
        lam_re_.value.at(ch, k) = T(-0.5);
        lam_im_.value.at(ch, k) = static_cast<T>(3.14159265358979323846 * k);
        c_re_.value.at(ch, k) = static_cast<T>(rng.normal() * cscale);
        c_im_.value.at(ch, k) = static_cast<T>(rng.normal() * cscale);
      }
      log_dt_.value.at(ch) = static_cast<T>(rng.uniform(std::log(1e-3), std::log(1e-1)));
      d_.value.at(ch) = T(1);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == c_, "s4d: bad input shape");
    const int tlen = x.dim(1), f = x.dim(2);
    discretize();
    Tensor<T> y = Tensor<T>::like(x);
    if (train) {
      cached_x_ = x;
      sre_ = Tensor<T>({c_, f, tlen, n_});
      sim_ = Tensor<T>({c_, f, tlen, n_});
    }
    std::vector<T> sr(static_cast<std::size_t>(n_)), si(static_cast<std::size_t>(n_));
    for (int ch = 0; ch < c_; ++ch) {
      const T* ar = &abar_re_.at(ch, 0);
      const T* ai = &abar_im_.at(ch, 0);
      const T* br = &bbar_re_.at(ch, 0);
      const T* bi = &bbar_im_.at(ch, 0);
      const T* cr = &c_re_.value.at(ch, 0);
      const T* ci = &c_im_.value.at(ch, 0);
      const T dv = d_.value.at(ch);
      for (int j = 0; j < f; ++j) {
        std::fill(sr.begin(), sr.end(), T(0));
        std::fill(si.begin(), si.end(), T(0));
        for (int t = 0; t < tlen; ++t) {
          const T xv = x.at(ch, t, j);
          T acc = T(0);
          for (int k = 0; k < n_; ++k) {
            const T prev_re = sr[static_cast<std::size_t>(k)];
            const T prev_im = si[static_cast<std::size_t>(k)];
            const T nre = ar[k] * prev_re - ai[k] * prev_im + br[k] * xv;
            const T nim = ai[k] * prev_re + ar[k] * prev_im + bi[k] * xv;
            sr[static_cast<std::size_t>(k)] = nre;
            si[static_cast<std::size_t>(k)] = nim;
            acc += cr[k] * nre - ci[k] * nim;
          }
          y.at(ch, t, j) = acc + dv * xv;
          if (train) {
            T* pr = &sre_.at(ch, j, t, 0);
            T* pi = &sim_.at(ch, j, t, 0);
            for (int k = 0; k < n_; ++k) {
              pr[k] = sr[static_cast<std::size_t>(k)];
              pi[k] = si[static_cast<std::size_t>(k)];
            }
          }
        }
      }
    }
    guard_finite(y, "s4d");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = cached_x_;
    require(x.numel() > 0, "s4d: backward before forward");
    const int tlen = x.dim(1), f = x.dim(2);
    Tensor<T> dx = Tensor<T>::like(x);
    std::vector<T> asr(static_cast<std::size_t>(n_)), asi(static_cast<std::size_t>(n_));
    std::vector<double> dar(static_cast<std::size_t>(n_)), dai(static_cast<std::size_t>(n_)),
        dbr(static_cast<std::size_t>(n_)), dbi(static_cast<std::size_t>(n_));
    for (int ch = 0; ch < c_; ++ch) {
      const T* ar = &abar_re_.at(ch, 0);
      const T* ai = &abar_im_.at(ch, 0);
      const T* br = &bbar_re_.at(ch, 0);
      const T* bi = &bbar_im_.at(ch, 0);
      const T* cr = &c_re_.value.at(ch, 0);
      const T* ci = &c_im_.value.at(ch, 0);
      const T dv = d_.value.at(ch);
      std::fill(dar.begin(), dar.end(), 0.0);
      std::fill(dai.begin(), dai.end(), 0.0);
      std::fill(dbr.begin(), dbr.end(), 0.0);
      std::fill(dbi.begin(), dbi.end(), 0.0);
      double dd = 0.0;
      for (int j = 0; j < f; ++j) {
        std::fill(asr.begin(), asr.end(), T(0));
        std::fill(asi.begin(), asi.end(), T(0));
        for (int t = tlen - 1; t >= 0; --t) {
          const T g = dy.at(ch, t, j);
          const T xv = x.at(ch, t, j);
          dd += static_cast<double>(g) * xv;
          T dxv = dv * g;
          const T* pr = &sre_.at(ch, j, t, 0);
          const T* pi = &sim_.at(ch, j, t, 0);
          const T* qr = t > 0 ? &sre_.at(ch, j, t - 1, 0) : nullptr;
          const T* qi = t > 0 ? &sim_.at(ch, j, t - 1, 0) : nullptr;
          for (int k = 0; k < n_; ++k) {
            c_re_.grad.at(ch, k) += g * pr[k];
            c_im_.grad.at(ch, k) -= g * pi[k];
            T are = asr[static_cast<std::size_t>(k)] + g * cr[k];
            T aim = asi[static_cast<std::size_t>(k)] - g * ci[k];
            const T sre_prev = qr ? qr[k] : T(0);
            const T sim_prev = qi ? qi[k] : T(0);
            dar[static_cast<std::size_t>(k)] += static_cast<double>(are) * sre_prev +
                                                static_cast<double>(aim) * sim_prev;
            dai[static_cast<std::size_t>(k)] += -static_cast<double>(are) * sim_prev +
                                                static_cast<double>(aim) * sre_prev;
            dbr[static_cast<std::size_t>(k)] += static_cast<double>(are) * xv;
            dbi[static_cast<std::size_t>(k)] += static_cast<double>(aim) * xv;
            dxv += br[k] * are + bi[k] * aim;
            asr[static_cast<std::size_t>(k)] = ar[k] * are + ai[k] * aim;
            asi[static_cast<std::size_t>(k)] = -ai[k] * are + ar[k] * aim;
          }
          dx.at(ch, t, j) = dxv;
        }
      }
      d_.grad.at(ch) += static_cast<T>(dd);
      chain_to_params(ch, dar, dai, dbr, dbi);
    }
    return dx;
  }

  // Streaming: one C x F frame per call, complex state persists.
  Tensor<T> step(const Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == c_, "s4d step: bad frame shape");
    const int f = frame.dim(1);
    if (stream_re_.numel() == 0 || stream_re_.dim(1) != f) {
      discretize();
      stream_re_ = Tensor<T>({c_, f, n_});
      stream_im_ = Tensor<T>({c_, f, n_});
    }
    Tensor<T> y = Tensor<T>::like(frame);
    for (int ch = 0; ch < c_; ++ch) {
      const T* ar = &abar_re_.at(ch, 0);
      const T* ai = &abar_im_.at(ch, 0);
      const T* br = &bbar_re_.at(ch, 0);
      const T* bi = &bbar_im_.at(ch, 0);
      const T* cr = &c_re_.value.at(ch, 0);
      const T* ci = &c_im_.value.at(ch, 0);
      const T dv = d_.value.at(ch);
      for (int j = 0; j < f; ++j) {
        T* sr = &stream_re_.at(ch, j, 0);
        T* si = &stream_im_.at(ch, j, 0);
        const T xv = frame.at(ch, j);
        T acc = T(0);
        for (int k = 0; k < n_; ++k) {
          const T prev_re = sr[k];
          const T prev_im = si[k];
          const T nre = ar[k] * prev_re - ai[k] * prev_im + br[k] * xv;
          const T nim = ai[k] * prev_re + ar[k] * prev_im + bi[k] * xv;
          sr[k] = nre;
          si[k] = nim;
          acc += cr[k] * nre - ci[k] * nim;
        }
        y.at(ch, j) = acc + dv * xv;
      }
    }
    return y;
  }

  void reset_stream() {
    stream_re_ = Tensor<T>();
    stream_im_ = Tensor<T>();
  }

  std::vector<Param<T>*> params() {
    return {&lam_re_, &lam_im_, &c_re_, &c_im_, &log_dt_, &d_};
  }
  long param_count() const { return 4L * c_ * n_ + 2L * c_; }
  long macs_per_frame(int f_bins) const {
    return static_cast<long>(c_) * f_bins * (8L * n_ + 1);
  }
  long clamp_warnings() const { return clamp_warnings_; }
  int state_dim() const { return n_; }

  // Direct access for oracle tests (set A/B/C/D, inspect kernels).
  Param<T>& lam_re() { return lam_re_; }
  Param<T>& lam_im() { return lam_im_; }
  Param<T>& c_re() { return c_re_; }
  Param<T>& c_im() { return c_im_; }
  Param<T>& log_dt() { return log_dt_; }
  Param<T>& d() { return d_; }
  void rediscretize() { discretize(); }
  std::complex<double> abar(int ch, int k) const {
    return {static_cast<double>(abar_re_.at(ch, k)), static_cast<double>(abar_im_.at(ch, k))};
  }
  std::complex<double> bbar(int ch, int k) const {
    return {static_cast<double>(bbar_re_.at(ch, k)), static_cast<double>(bbar_im_.at(ch, k))};
  }

 private:
  void discretize() {
    if (abar_re_.numel() == 0) {
      abar_re_ = Tensor<T>({c_, n_});
      abar_im_ = Tensor<T>({c_, n_});
      bbar_re_ = Tensor<T>({c_, n_});
      bbar_im_ = Tensor<T>({c_, n_});
      clamped_.assign(static_cast<std::size_t>(c_) * n_, 0);
    }
    for (int ch = 0; ch < c_; ++ch) {
      const double dt = std::exp(static_cast<double>(log_dt_.value.at(ch)));
      for (int k = 0; k < n_; ++k) {
        const std::complex<double> lam(static_cast<double>(lam_re_.value.at(ch, k)),
                                       static_cast<double>(lam_im_.value.at(ch, k)));
        std::complex<double> a = std::exp(lam * dt);
        bool clamped = false;
        const double mag = std::abs(a);
        if (mag >= 1.0) {
          a *= (1.0 - 1e-6) / mag;
          ++clamp_warnings_;
          clamped = true;
        }
        std::complex<double> b;
        if (std::abs(lam) < 1e-12)
          b = dt;  // exp(lam dt) ~ 1 + lam dt
        else
          b = (a - 1.0) / lam;
        abar_re_.at(ch, k) = static_cast<T>(a.real());
        abar_im_.at(ch, k) = static_cast<T>(a.imag());
        bbar_re_.at(ch, k) = static_cast<T>(b.real());
        bbar_im_.at(ch, k) = static_cast<T>(b.imag());
        clamped_[static_cast<std::size_t>(ch) * n_ + k] = clamped ? 1 : 0;
      }
    }
  }

  // Chain discretized-matrix gradients back to lambda and log_dt. With
  // holomorphic f and gz := dL/dRe + i dL/dIm: gz = gw * conj(f').
  void chain_to_params(int ch, const std::vector<double>& dar, const std::vector<double>& dai,
                       const std::vector<double>& dbr, const std::vector<double>& dbi) {
    const double dt = std::exp(static_cast<double>(log_dt_.value.at(ch)));
    double ddt = 0.0;
    for (int k = 0; k < n_; ++k) {
      if (clamped_[static_cast<std::size_t>(ch) * n_ + k]) continue;
      const std::complex<double> lam(static_cast<double>(lam_re_.value.at(ch, k)),
                                     static_cast<double>(lam_im_.value.at(ch, k)));
      const std::complex<double> a(static_cast<double>(abar_re_.at(ch, k)),
                                   static_cast<double>(abar_im_.at(ch, k)));
      const std::complex<double> ga(dar[static_cast<std::size_t>(k)],
                                    dai[static_cast<std::size_t>(k)]);
      const std::complex<double> gb(dbr[static_cast<std::size_t>(k)],
                                    dbi[static_cast<std::size_t>(k)]);
      std::complex<double> glam = ga * std::conj(dt * a);
      std::complex<double> db_dlam;
      if (std::abs(lam) < 1e-12)
        db_dlam = 0.5 * dt * dt;  // limit of ((dt*a*lam - a + 1)/lam^2)
      else
        db_dlam = (dt * a * lam - a + 1.0) / (lam * lam);
      glam += gb * std::conj(db_dlam);
      lam_re_.grad.at(ch, k) += static_cast<T>(glam.real());
      lam_im_.grad.at(ch, k) += static_cast<T>(glam.imag());
      ddt += (std::conj(ga) * (lam * a)).real();
      ddt += (std::conj(gb) * a).real();
    }
    log_dt_.grad.at(ch) += static_cast<T>(ddt * dt);
  }

  int c_ = 0, n_ = 0;
  Param<T> lam_re_, lam_im_, c_re_, c_im_, log_dt_, d_;
  Tensor<T> abar_re_, abar_im_, bbar_re_, bbar_im_;
  std::vector<std::uint8_t> clamped_;
  long clamp_warnings_ = 0;
  Tensor<T> cached_x_;
  Tensor<T> sre_, sim_;          // training state cache
  Tensor<T> stream_re_, stream_im_;
};

}  // namespace echolab::nn
