// 20-band layout over 0..11025 Hz and the band-cepstrum transform pair.
//
// The lower 18 bands tile 0..8000 Hz on an equal-Bark grid with edges snapped
// to FFT bins; the top two bands are fixed at 8000-9500 and 9500-11025 Hz.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "s2lpc/common.hpp"
#include "s2lpc/fft.hpp"
#include "s2lpc/framing.hpp"

namespace s2lpc::dsp {

constexpr int kNumBands = 20;

// Traunmueller's Bark approximation and its inverse.
inline double hz_to_bark(double f) { return 26.81 * f / (1960.0 + f) - 0.53; }
inline double bark_to_hz(double z) {
  return 1960.0 * (z + 0.53) / (26.28 - z);
}

struct BandLayout {
  // 21 ascending boundaries in Hz; edges[0] = 0, edges[20] = 11025.
  std::array<double, kNumBands + 1> edges_hz{};

  static BandLayout bark_default(const FrameSpec& spec = FrameSpec{},
                                 int sample_rate = kSampleRate) {
    BandLayout layout;
    const double bin_hz = static_cast<double>(sample_rate) / spec.fft_size;
    const double bark_top = hz_to_bark(8000.0);
    layout.edges_hz[0] = 0.0;
    for (int i = 1; i < 18; ++i) {
      const double f = bark_to_hz(bark_top * i / 18.0);
      layout.edges_hz[i] = std::round(f / bin_hz) * bin_hz;
    }
    layout.edges_hz[18] = 8000.0;
    layout.edges_hz[19] = 9500.0;
    layout.edges_hz[20] = 11025.0;
    return layout;
  }
};

inline void validate(const BandLayout& layout) {
  require(layout.edges_hz.front() == 0.0, "band layout must start at 0 Hz");
  require(layout.edges_hz.back() == 11025.0,
          "band layout must end at 11025 Hz");
  require(layout.edges_hz[18] == 8000.0 && layout.edges_hz[19] == 9500.0,
          "top two bands must be 8000-9500 and 9500-11025 Hz");
  for (int i = 0; i < kNumBands; ++i)
    require(layout.edges_hz[i] < layout.edges_hz[i + 1],
            "band edges must be strictly ascending");
}

// Band boundaries as FFT bin indices; band b covers [bins[b], bins[b+1]) and
// the last band additionally includes the Nyquist bin.
inline std::array<int, kNumBands + 1> band_bins(const BandLayout& layout,
                                                const FrameSpec& spec,
                                                int sample_rate = kSampleRate) {
  std::array<int, kNumBands + 1> bins{};
  for (int i = 0; i <= kNumBands; ++i) {
    bins[i] = static_cast<int>(
        std::lround(layout.edges_hz[i] * spec.fft_size / sample_rate));
  }
  return bins;
}

// Power-spectrum energy aggregated per band from one windowed frame.
inline std::array<double, kNumBands> band_energies(
    const std::vector<double>& frame, const BandLayout& layout,
    const FrameSpec& spec) {
  require(static_cast<int>(frame.size()) == spec.window,
          "band_energies: frame length must equal the analysis window");
  validate(layout);
  const std::vector<double> power = power_spectrum(frame, spec.fft_size);
  const std::array<int, kNumBands + 1> bins = band_bins(layout, spec);

  std::array<double, kNumBands> energy{};
  for (int b = 0; b < kNumBands; ++b) {
    const int hi = (b == kNumBands - 1) ? bins[b + 1] + 1 : bins[b + 1];
    double sum = 0.0;
    for (int k = bins[b]; k < hi; ++k) sum += power[k];
    energy[b] = sum;
  }
  return energy;
}

// Orthonormal DCT-II of the log band energies.
inline std::array<double, kNumBands> cepstrum_from_bands(
    const std::array<double, kNumBands>& bands) {
  std::array<double, kNumBands> logb{};
  for (int n = 0; n < kNumBands; ++n) {
    require(bands[n] >= 0.0, "cepstrum_from_bands: negative band energy");
    logb[n] = std::log(std::max(bands[n], kLogFloor));
  }
  std::array<double, kNumBands> cep{};
  const double n0 = std::sqrt(1.0 / kNumBands);
  const double nk = std::sqrt(2.0 / kNumBands);
  for (int k = 0; k < kNumBands; ++k) {
    double sum = 0.0;
    for (int n = 0; n < kNumBands; ++n)
      sum += logb[n] * std::cos(kPi * k * (2.0 * n + 1.0) / (2.0 * kNumBands));
    cep[k] = (k == 0 ? n0 : nk) * sum;
  }
  return cep;
}

// Inverse of cepstrum_from_bands (exact above the log floor).
inline std::array<double, kNumBands> bands_from_cepstrum(
    const std::array<double, kNumBands>& cep) {
  for (double c : cep)
    require(std::isfinite(c), "bands_from_cepstrum: non-finite cepstrum");
  const double n0 = std::sqrt(1.0 / kNumBands);
  const double nk = std::sqrt(2.0 / kNumBands);
  std::array<double, kNumBands> bands{};
  for (int n = 0; n < kNumBands; ++n) {
    double sum = 0.0;
    for (int k = 0; k < kNumBands; ++k) {
      sum += (k == 0 ? n0 : nk) * cep[k] *
             std::cos(kPi * k * (2.0 * n + 1.0) / (2.0 * kNumBands));
    }
    bands[n] = std::exp(sum);
  }
  return bands;
}

}  // namespace s2lpc::dsp
