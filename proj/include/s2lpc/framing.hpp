// Audio clip container and 256/512 frame segmentation with a periodic Hann
// analysis window.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "s2lpc/common.hpp"

namespace s2lpc::dsp {

constexpr int kSampleRate = 22050;

struct AudioClip {
  std::vector<double> samples;  // [-1, 1]
  int sample_rate = kSampleRate;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline void validate(const AudioClip& clip) {
  require(!clip.samples.empty(), "audio clip is empty");
  require(clip.sample_rate == kSampleRate,
          "unsupported sample rate " + std::to_string(clip.sample_rate) +
              " Hz (expected 22050 Hz)");
  for (double s : clip.samples) {
    require(std::isfinite(s), "audio clip contains a non-finite sample");
    require(std::abs(s) <= 1.0 + 1e-9, "audio sample out of [-1, 1]");
  }
}

struct FrameSpec {
  int hop = 256;
  int window = 512;
  int fft_size = 512;
};

inline void validate(const FrameSpec& spec) {
  require(spec.hop > 0 && spec.window > 0 && spec.fft_size > 0,
          "frame spec fields must be positive");
  require(spec.hop <= spec.window && spec.window <= spec.fft_size,
          "frame spec must satisfy hop <= window <= fft_size");
  require(is_power_of_two(spec.fft_size), "fft size must be a power of two");
}

inline int frame_count(size_t n_samples, const FrameSpec& spec) {
  if (n_samples < static_cast<size_t>(spec.window)) return 0;
  return static_cast<int>((n_samples - spec.window) / spec.hop) + 1;
}

// Periodic Hann, the 50% overlap analysis window.
inline std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<size_t>(length));
  for (int n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
  return w;
}

// Windowed frame t, samples [t*hop, t*hop + window).
inline std::vector<double> windowed_frame(const AudioClip& clip,
                                          const FrameSpec& spec, int t,
                                          const std::vector<double>& window) {
  std::vector<double> frame(static_cast<size_t>(spec.window));
  const size_t start = static_cast<size_t>(t) * spec.hop;
  for (int n = 0; n < spec.window; ++n)
    frame[n] = clip.samples[start + n] * window[n];
  return frame;
}

inline std::vector<std::vector<double>> frame_signal(const AudioClip& clip,
                                                     const FrameSpec& spec) {
  validate(clip);
  validate(spec);
  const int count = frame_count(clip.samples.size(), spec);
  const std::vector<double> window = hann_window(spec.window);
  std::vector<std::vector<double>> frames;
  frames.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t)
    frames.push_back(windowed_frame(clip, spec, t, window));
  return frames;
}

}  // namespace s2lpc::dsp
