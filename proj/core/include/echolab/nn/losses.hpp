#pragma once

#include <cmath>

#include "echolab/nn/tensor.hpp"

namespace echolab::nn {

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d prediction
};

// Binary cross entropy on raw logits, mean reduction over all elements.
// log(1+exp) is evaluated in the log-sum-exp form so large logits stay exact.
template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  require(logits.same_shape(targets), "bce: shape mismatch");
  require(logits.numel() > 0, "bce: empty input");
  LossResult<T> out;
  out.grad = Tensor<T>::like(logits);
  double acc = 0.0;
  const double inv_n = 1.0 / static_cast<double>(logits.numel());
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    const double y = static_cast<double>(targets[i]);
    if (y != 0.0 && y != 1.0) throw DomainError("bce: target outside {0,1}");
    const double z = static_cast<double>(logits[i]);
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.grad[i] = static_cast<T>((p - y) * inv_n);
  }
  out.loss = acc * inv_n;
  return out;
}

// Compressed RI + magnitude loss between complex spectrograms given as RI
// tensors of shape 2 x T x F (plane 0 = real). Sum reduction over (t, f);
// |0|^p reads as 0 and the gradient is cut at near-zero magnitudes where the
// compression is not differentiable.
template <typename T>
LossResult<T> ri_mag_loss(const Tensor<T>& pred, const Tensor<T>& target, double p = 0.5) {
  require(pred.same_shape(target), "ri_mag_loss: shape mismatch");
  require(pred.rank() == 3 && pred.dim(0) == 2, "ri_mag_loss: expected 2 x T x F tensors");
  require(p > 0.0 && p <= 1.0, "ri_mag_loss: p must be in (0,1]");
  const int tlen = pred.dim(1), f = pred.dim(2);
  LossResult<T> out;
  out.grad = Tensor<T>::like(pred);
  const double eps = 1e-12;
  double acc = 0.0;
  for (int t = 0; t < tlen; ++t) {
    for (int j = 0; j < f; ++j) {
      const double xr = pred.at(0, t, j), xi = pred.at(1, t, j);
      const double yr = target.at(0, t, j), yi = target.at(1, t, j);
      const double mx = std::sqrt(xr * xr + xi * xi);
      const double my = std::sqrt(yr * yr + yi * yi);
      const double cx = mx > 0 ? std::pow(mx, p) : 0.0;  // |X|^p
      const double cy = my > 0 ? std::pow(my, p) : 0.0;
      // compressed-phase RI vectors |.|^p e^{j angle} = |.|^(p-1) * value
      const double sx = mx > eps ? cx / mx : 0.0;
      const double sy = my > eps ? cy / my : 0.0;
      const double rre = sx * xr - sy * yr;
      const double rim = sx * xi - sy * yi;
      const double dm = cx - cy;
      acc += rre * rre + rim * rim + dm * dm;
      if (mx > eps) {
        // d(sx*x)/dx has the radial correction (p-1)|x|^(p-3) x x^T
        const double radial = (p - 1.0) * cx / (mx * mx * mx);
        const double g_rre = 2.0 * rre, g_rim = 2.0 * rim;
        double gr = g_rre * (sx + radial * xr * xr) + g_rim * radial * xr * xi;
        double gi = g_rre * radial * xr * xi + g_rim * (sx + radial * xi * xi);
        const double gmag = 2.0 * dm * p * cx / (mx * mx);
        gr += gmag * xr;
        gi += gmag * xi;
        out.grad.at(0, t, j) = static_cast<T>(gr);
        out.grad.at(1, t, j) = static_cast<T>(gi);
      }
    }
  }
  out.loss = acc;
  return out;
}

}  // namespace echolab::nn
