#pragma once

// Shared test utilities: random tensors, finite-difference gradient checks,
// and small numeric helpers used across the suites.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"
#include "echolab/nn/tensor.hpp"
#include "echolab/rng.hpp"

namespace testutil {

using echolab::Pcg32;
using echolab::nn::Param;
using echolab::nn::Tensor;

inline Tensor<double> random_tensor(std::vector<int> shape, Pcg32& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

inline double rel_err(double a, double b) {
  const double denom = std::max(std::fabs(a), std::fabs(b));
  if (denom == 0.0) return 0.0;
  return std::fabs(a - b) / denom;
}

inline double max_abs(const Tensor<double>& t) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.numel(); ++i) m = std::max(m, std::fabs(t[i]));
  return m;
}

// Central finite-difference check of a scalar loss against analytic gradients.
//
// `loss_fn` must run the forward pass and return the scalar; `grads` are the
// analytic d loss / d theta produced beforehand by one forward+backward at the
// unperturbed point. Each parameter element is wiggled by +-h and the centred
// quotient compared. Elements where both sides are tiny are judged on the
// absolute difference instead: the quotient loses all significant digits when
// the true derivative is ~1e-9 and the loss is O(1), and a relative test on
// roundoff noise would only measure the noise.
struct FdReport {
  double max_rel = 0.0;
  double worst_analytic = 0.0;
  double worst_fd = 0.0;
  std::string worst_name;
};

inline void fd_check_values(Tensor<double>& values, const Tensor<double>& grads,
                            const std::function<double()>& loss_fn, const std::string& name,
                            FdReport& rep, double h = 1e-5, double abs_floor = 1e-7) {
  for (std::size_t i = 0; i < values.numel(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double lp = loss_fn();
    values[i] = keep - h;
    const double lm = loss_fn();
    values[i] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    const double g = grads[i];
    if (std::fabs(fd) < abs_floor && std::fabs(g) < abs_floor) continue;
    const double r = rel_err(fd, g);
    if (r > rep.max_rel) {
      rep.max_rel = r;
      rep.worst_analytic = g;
      rep.worst_fd = fd;
      rep.worst_name = name + "[" + std::to_string(i) + "]";
    }
  }
}

inline void fd_check_param(Param<double>& p, const std::function<double()>& loss_fn,
                           FdReport& rep, double h = 1e-5) {
  fd_check_values(p.value, p.grad, loss_fn, p.name, rep, h);
}

// Scalar loss used by the layer checks: sum(dy .* y) with a fixed random dy,
// so d loss / d y = dy and anything upstream is exercised through backward(dy).
inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& dy) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) acc += y[i] * dy[i];
  return acc;
}

}  // namespace testutil
