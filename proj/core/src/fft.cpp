#include "echolab/fft.hpp"

#include <cmath>
#include <cstdint>
#include <map>

#include "echolab/common.hpp"

namespace echolab {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey, n a power of two. sign = -1 forward.
void fft_pow2(cdouble* a, std::size_t n, int sign) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTau / static_cast<double>(len);
    const cdouble wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cdouble u = a[i + k];
        cdouble v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Bluestein chirp tables for one transform length.
struct BluesteinPlan {
  std::size_t n = 0, m = 0;
  std::vector<cdouble> chirp;     // w_k = exp(-i pi k^2 / n)
  std::vector<cdouble> b_spec;    // FFT of zero-padded conjugate chirp
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
  thread_local std::map<std::size_t, BluesteinPlan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  BluesteinPlan plan;
  plan.n = n;
  plan.m = next_pow2(2 * n - 1);
  plan.chirp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument small and exact in double.
    std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
    double ang = -kTau * 0.5 * static_cast<double>(k2) / static_cast<double>(n);
    plan.chirp[k] = cdouble(std::cos(ang), std::sin(ang));
  }
  std::vector<cdouble> b(plan.m, cdouble(0.0, 0.0));
  b[0] = std::conj(plan.chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(plan.chirp[k]);
    b[plan.m - k] = std::conj(plan.chirp[k]);
  }
  fft_pow2(b.data(), plan.m, -1);
  plan.b_spec = std::move(b);
  return cache.emplace(n, std::move(plan)).first->second;
}

void fft_bluestein(std::vector<cdouble>& x, int sign) {
  const std::size_t n = x.size();
  const BluesteinPlan& plan = bluestein_plan(n);
  std::vector<cdouble> a(plan.m, cdouble(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    cdouble c = plan.chirp[k];
    if (sign > 0) c = std::conj(c);
    a[k] = x[k] * c;
  }
  fft_pow2(a.data(), plan.m, -1);
  if (sign > 0) {
    // Inverse transform via conjugated tables.
    for (std::size_t k = 0; k < plan.m; ++k) a[k] *= std::conj(plan.b_spec[k]);
  } else {
    for (std::size_t k = 0; k < plan.m; ++k) a[k] *= plan.b_spec[k];
  }
  fft_pow2(a.data(), plan.m, 1);
  const double scale = 1.0 / static_cast<double>(plan.m);
  for (std::size_t k = 0; k < n; ++k) {
    cdouble c = plan.chirp[k];
    if (sign > 0) c = std::conj(c);
    x[k] = a[k] * c * scale;
  }
}

void fft_dispatch(std::vector<cdouble>& x, int sign) {
  if (x.size() <= 1) return;
  if (is_pow2(x.size())) {
    fft_pow2(x.data(), x.size(), sign);
  } else {
    fft_bluestein(x, sign);
  }
}

}  // namespace

void fft(std::vector<cdouble>& x) { fft_dispatch(x, -1); }

void ifft(std::vector<cdouble>& x) {
  fft_dispatch(x, 1);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= scale;
}

std::vector<cdouble> rfft(const std::vector<double>& x) {
  require(!x.empty(), "rfft: empty input");
  std::vector<cdouble> a(x.begin(), x.end());
  fft(a);
  a.resize(x.size() / 2 + 1);
  return a;
}

std::vector<double> irfft(const std::vector<cdouble>& bins, std::size_t n) {
  require(bins.size() == n / 2 + 1, "irfft: bin count does not match length");
  std::vector<cdouble> a(n);
  for (std::size_t k = 0; k < bins.size(); ++k) a[k] = bins[k];
  for (std::size_t k = bins.size(); k < n; ++k) a[k] = std::conj(a[n - k]);
  ifft(a);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

std::vector<double> fft_convolve_truncated(const std::vector<double>& x,
                                           const std::vector<double>& h) {
  require(!x.empty() && !h.empty(), "fft_convolve: empty operand");
  const std::size_t m = next_pow2(x.size() + h.size() - 1);
  std::vector<cdouble> xa(m, cdouble(0.0, 0.0)), ha(m, cdouble(0.0, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) xa[i] = x[i];
  for (std::size_t i = 0; i < h.size(); ++i) ha[i] = h[i];
  fft(xa);
  fft(ha);
  for (std::size_t i = 0; i < m; ++i) xa[i] *= ha[i];
  ifft(xa);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = xa[i].real();
  return y;
}

}  // namespace echolab
