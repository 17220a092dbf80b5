// Iterative radix-2 FFT, sized for the 512/1024-point analysis used here.
#pragma once

#include <complex>
#include <vector>

#include "s2lpc/common.hpp"

namespace s2lpc::dsp {

using s2lpc::is_power_of_two;

// In-place complex FFT (decimation in time). n must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& x) {
  const int n = static_cast<int>(x.size());
  require(is_power_of_two(n), "fft: size must be a power of two");

  // bit reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (int len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / len;
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// One-sided power spectrum |X_k|^2, k = 0..n/2, of a real frame zero-padded
// to fft_size.
inline std::vector<double> power_spectrum(const std::vector<double>& frame,
                                          int fft_size) {
  require(is_power_of_two(fft_size), "power_spectrum: fft size not a power of two");
  require(static_cast<int>(frame.size()) <= fft_size,
          "power_spectrum: frame longer than fft size");
  std::vector<std::complex<double>> buf(static_cast<size_t>(fft_size));
  for (size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_inplace(buf);
  std::vector<double> p(static_cast<size_t>(fft_size / 2 + 1));
  for (int k = 0; k <= fft_size / 2; ++k) p[k] = std::norm(buf[k]);
  return p;
}

}  // namespace s2lpc::dsp
