#include "echolab/mvdr.hpp"

#include <cmath>

#include "echolab/common.hpp"

namespace echolab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLoading = 1e-6;

// Solve a x = b (dense complex, partial pivoting). Returns false when no
// usable pivot exists even after diagonal loading.
bool solve_complex(std::vector<cdouble> a, std::vector<cdouble> b, int n,
                   std::vector<cdouble>& x) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a[static_cast<std::size_t>(k) * n + k]);
    for (int r = k + 1; r < n; ++r) {
      const double m = std::abs(a[static_cast<std::size_t>(r) * n + k]);
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best < 1e-24) return false;
    if (piv != k) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(k) * n + c], a[static_cast<std::size_t>(piv) * n + c]);
      std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(piv)]);
    }
    const cdouble inv = 1.0 / a[static_cast<std::size_t>(k) * n + k];
    for (int r = k + 1; r < n; ++r) {
      const cdouble factor = a[static_cast<std::size_t>(r) * n + k] * inv;
      if (factor == cdouble(0.0, 0.0)) continue;
      for (int c = k; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= factor * a[static_cast<std::size_t>(k) * n + c];
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(k)];
    }
  }
  x.assign(static_cast<std::size_t>(n), cdouble(0.0, 0.0));
  for (int k = n - 1; k >= 0; --k) {
    cdouble acc = b[static_cast<std::size_t>(k)];
    for (int c = k + 1; c < n; ++c)
      acc -= a[static_cast<std::size_t>(k) * n + c] * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(k)] = acc / a[static_cast<std::size_t>(k) * n + k];
  }
  return true;
}

}  // namespace

MvdrOnline::MvdrOnline(const ArraySpec& array, const StftConfig& cfg,
                       double steer_direction_deg, double forget)
    : array_(array), cfg_(cfg), forget_(forget), q_(array.num_mics), bins_(cfg.num_bins()) {
  require(q_ >= 2, "mvdr: need at least 2 mics");
  require(forget > 0.0 && forget < 1.0, "mvdr: forgetting factor in (0,1)");
  r_.assign(static_cast<std::size_t>(bins_),
            std::vector<cdouble>(static_cast<std::size_t>(q_) * q_, cdouble(0.0, 0.0)));
  d_.assign(static_cast<std::size_t>(bins_), std::vector<cdouble>(static_cast<std::size_t>(q_)));
  w_.assign(static_cast<std::size_t>(bins_), std::vector<cdouble>(static_cast<std::size_t>(q_)));
  compute_steering(steer_direction_deg);
}

void MvdrOnline::compute_steering(double direction_deg) {
  const double a = direction_deg * kPi / 180.0;
  const Vec3 u{std::cos(a), std::sin(a), 0.0};
  std::vector<double> tau(static_cast<std::size_t>(q_));
  for (int q = 0; q < q_; ++q) {
    const Vec3 r = array_.mic_positions[static_cast<std::size_t>(q)] - array_.center;
    tau[static_cast<std::size_t>(q)] = -dot(r, u) / kSpeedOfSound;
  }
  for (int f = 0; f < bins_; ++f) {
    const double f_hz = static_cast<double>(f) * cfg_.fs / cfg_.fft_size();
    for (int q = 0; q < q_; ++q) {
      const double phase = -2.0 * kPi * f_hz * tau[static_cast<std::size_t>(q)];
      d_[static_cast<std::size_t>(f)][static_cast<std::size_t>(q)] = {std::cos(phase),
                                                                      std::sin(phase)};
    }
    // Distortionless fallback weight before any data arrives: d / (d^H d).
    double norm2 = 0.0;
    for (int q = 0; q < q_; ++q) norm2 += std::norm(d_[static_cast<std::size_t>(f)][static_cast<std::size_t>(q)]);
    for (int q = 0; q < q_; ++q)
      w_[static_cast<std::size_t>(f)][static_cast<std::size_t>(q)] =
          d_[static_cast<std::size_t>(f)][static_cast<std::size_t>(q)] / norm2;
  }
}

void MvdrOnline::set_direction(double steer_direction_deg) {
  compute_steering(steer_direction_deg);
}

std::vector<cdouble> MvdrOnline::step(const std::vector<std::vector<cdouble>>& frame) {
  require(static_cast<int>(frame.size()) == q_, "mvdr step: wrong channel count");
  for (const auto& ch : frame)
    require(static_cast<int>(ch.size()) == bins_, "mvdr step: wrong bin count");

  std::vector<cdouble> out(static_cast<std::size_t>(bins_));
  std::vector<cdouble> loaded(static_cast<std::size_t>(q_) * q_);
  std::vector<cdouble> x;
  for (int f = 0; f < bins_; ++f) {
    auto& r = r_[static_cast<std::size_t>(f)];
    for (int i = 0; i < q_; ++i) {
      const cdouble yi = frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
      for (int j = 0; j < q_; ++j) {
        const cdouble yj = frame[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
        r[static_cast<std::size_t>(i) * q_ + j] =
            forget_ * r[static_cast<std::size_t>(i) * q_ + j] +
            (1.0 - forget_) * yi * std::conj(yj);
      }
    }

    double trace = 0.0;
    for (int i = 0; i < q_; ++i) trace += r[static_cast<std::size_t>(i) * q_ + i].real();
    const double delta = kLoading * trace / q_;
    loaded = r;
    for (int i = 0; i < q_; ++i) loaded[static_cast<std::size_t>(i) * q_ + i] += delta;

    const auto& d = d_[static_cast<std::size_t>(f)];
    auto& w = w_[static_cast<std::size_t>(f)];
    if (solve_complex(loaded, d, q_, x)) {
      cdouble dhx(0.0, 0.0);
      for (int i = 0; i < q_; ++i) dhx += std::conj(d[static_cast<std::size_t>(i)]) * x[static_cast<std::size_t>(i)];
      if (std::abs(dhx) > 1e-24) {
        for (int i = 0; i < q_; ++i) w[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] / dhx;
      } else {
        ++fallbacks_;
      }
    } else {
      ++fallbacks_;
    }

    cdouble y_out(0.0, 0.0);
    for (int i = 0; i < q_; ++i)
      y_out += std::conj(w[static_cast<std::size_t>(i)]) *
               frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
    out[static_cast<std::size_t>(f)] = y_out;
  }
  return out;
}

namespace {

SpectroTensor run_mvdr(const SpectroTensor& mixture, const std::vector<double>* track,
                       double fixed_deg, const ArraySpec& array, double forget) {
  require(mixture.channels == array.num_mics, "mvdr: channel count != mic count");
  MvdrOnline bf(array, mixture.config, track ? track->front() : fixed_deg, forget);
  SpectroTensor out(1, mixture.frames, mixture.bins);
  out.config = mixture.config;
  out.source_samples = mixture.source_samples;
  std::vector<std::vector<cdouble>> frame(
      static_cast<std::size_t>(mixture.channels),
      std::vector<cdouble>(static_cast<std::size_t>(mixture.bins)));
  double current = track ? track->front() : fixed_deg;
  for (int t = 0; t < mixture.frames; ++t) {
    if (track) {
      const double dir = (*track)[static_cast<std::size_t>(t)];
      if (dir != current) {
        bf.set_direction(dir);
        current = dir;
      }
    }
    for (int q = 0; q < mixture.channels; ++q)
      for (int f = 0; f < mixture.bins; ++f)
        frame[static_cast<std::size_t>(q)][static_cast<std::size_t>(f)] = mixture.at(q, t, f);
    const std::vector<cdouble> y = bf.step(frame);
    for (int f = 0; f < mixture.bins; ++f) out.at(0, t, f) = y[static_cast<std::size_t>(f)];
  }
  return out;
}

}  // namespace

SpectroTensor mvdr_online(const SpectroTensor& mixture, double steer_direction_deg,
                          const ArraySpec& array, double forget) {
  return run_mvdr(mixture, nullptr, steer_direction_deg, array, forget);
}

SpectroTensor mvdr_online_tracked(const SpectroTensor& mixture,
                                  const std::vector<double>& direction_per_frame,
                                  const ArraySpec& array, double forget) {
  require(static_cast<int>(direction_per_frame.size()) == mixture.frames,
          "mvdr: per-frame direction track length mismatch");
  return run_mvdr(mixture, &direction_per_frame, 0.0, array, forget);
}

}  // namespace echolab
