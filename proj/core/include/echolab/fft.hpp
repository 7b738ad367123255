#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace echolab {

using cdouble = std::complex<double>;

// In-place complex FFT/IFFT for any length n >= 1. Power-of-two lengths run
// the iterative radix-2 kernel; everything else goes through Bluestein's
// chirp-z, so the 320-sample analysis frame is exact to ~1e-15. IFFT includes
// the 1/n scale.
void fft(std::vector<cdouble>& x);
void ifft(std::vector<cdouble>& x);

// Real-input helpers for spectra with F = n/2 + 1 nonnegative bins.
std::vector<cdouble> rfft(const std::vector<double>& x);
std::vector<double> irfft(const std::vector<cdouble>& bins, std::size_t n);

// Linear convolution truncated to y.size() == x.size() (AEC rendering
// convention: the tail beyond the input length is dropped).
std::vector<double> fft_convolve_truncated(const std::vector<double>& x,
                                           const std::vector<double>& h);

}  // namespace echolab
