// 80-channel log mel-spectrogram targets.
//
// Frames are centered on the same 256-sample grid as the LPCNet feature
// framing (zero padding at the clip edges), so both feature streams always
// have identical frame counts.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "s2lpc/common.hpp"
#include "s2lpc/fft.hpp"
#include "s2lpc/framing.hpp"

namespace s2lpc::dsp {

constexpr int kMelChannels = 80;

struct MelConfig {
  int n_channels = kMelChannels;
  int window = 1024;
  int fft_size = 1024;
  double f_min = 0.0;
  double f_max = 11025.0;
};

using MelFrame = std::vector<double>;  // n_channels log energies

inline double hz_to_mel(double f) {
  return 2595.0 * std::log10(1.0 + f / 700.0);
}
inline double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

// Triangular filterbank rows over the one-sided spectrum bins.
inline std::vector<std::vector<double>> mel_filterbank(
    const MelConfig& cfg = MelConfig{}, int sample_rate = kSampleRate) {
  const int n_bins = cfg.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> pts(static_cast<size_t>(cfg.n_channels) + 2);
  for (size_t i = 0; i < pts.size(); ++i)
    pts[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_channels + 1));

  std::vector<std::vector<double>> fb(
      static_cast<size_t>(cfg.n_channels),
      std::vector<double>(static_cast<size_t>(n_bins), 0.0));
  for (int m = 0; m < cfg.n_channels; ++m) {
    const double lo = pts[m], c = pts[m + 1], hi = pts[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
      double w = 0.0;
      if (f > lo && f < hi)
        w = (f <= c) ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
      fb[m][k] = w;
    }
  }
  return fb;
}

// Center frequencies of the mel channels in Hz.
inline std::vector<double> mel_centers_hz(const MelConfig& cfg = MelConfig{}) {
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> centers(static_cast<size_t>(cfg.n_channels));
  for (int m = 0; m < cfg.n_channels; ++m)
    centers[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_channels + 1));
  return centers;
}

// Mel analysis frame centered at the feature-frame center, zero padded.
inline std::vector<double> centered_frame(const AudioClip& clip, int center,
                                          int length,
                                          const std::vector<double>& window) {
  std::vector<double> frame(static_cast<size_t>(length), 0.0);
  const int n = static_cast<int>(clip.samples.size());
  for (int i = 0; i < length; ++i) {
    const int s = center - length / 2 + i;
    if (s >= 0 && s < n) frame[i] = clip.samples[s] * window[i];
  }
  return frame;
}

inline std::vector<MelFrame> mel_spectrogram(const AudioClip& clip,
                                             const FrameSpec& feature_spec = FrameSpec{},
                                             const MelConfig& cfg = MelConfig{}) {
  validate(clip);
  validate(feature_spec);
  const int count = frame_count(clip.samples.size(), feature_spec);
  const std::vector<std::vector<double>> fb = mel_filterbank(cfg);
  const std::vector<double> window = hann_window(cfg.window);

  std::vector<MelFrame> mel;
  mel.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) {
    const int center = t * feature_spec.hop + feature_spec.window / 2;
    const std::vector<double> frame =
        centered_frame(clip, center, cfg.window, window);
    const std::vector<double> power = power_spectrum(frame, cfg.fft_size);
    MelFrame out(static_cast<size_t>(cfg.n_channels));
    for (int m = 0; m < cfg.n_channels; ++m) {
      double e = 0.0;
      for (size_t k = 0; k < power.size(); ++k) e += fb[m][k] * power[k];
      out[m] = std::log(std::max(e, kLogFloor));
    }
    mel.push_back(std::move(out));
  }
  return mel;
}

}  // namespace s2lpc::dsp
