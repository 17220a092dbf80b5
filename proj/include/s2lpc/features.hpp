// Extraction of the 22-dimensional per-frame feature set:
// 20 band cepstra + dequantized log pitch + pitch correlation.
#pragma once

#include <array>
#include <thread>
#include <vector>

#include "s2lpc/band_cepstrum.hpp"
#include "s2lpc/common.hpp"
#include "s2lpc/framing.hpp"
#include "s2lpc/pitch.hpp"

namespace s2lpc::dsp {

constexpr int kFeatureDim = 22;

struct FeatureFrame {
  std::array<double, kNumBands> cepstra{};
  double log_pitch_q = 0.0;
  double pitch_corr = 0.0;

  std::array<double, kFeatureDim> flat() const {
    std::array<double, kFeatureDim> v{};
    for (int i = 0; i < kNumBands; ++i) v[i] = cepstra[i];
    v[20] = log_pitch_q;
    v[21] = pitch_corr;
    return v;
  }
};

struct ExtractResult {
  std::vector<FeatureFrame> frames;
  std::vector<int> pitch_level;  // quantizer indices, same length
  bool all_unvoiced = false;
};

// Full 22-feature extraction. Frame-wise work (cepstrum + pitch) is split
// across n_threads workers; the output is identical for any thread count.
inline ExtractResult extract_features(const AudioClip& clip,
                                      const FrameSpec& spec = FrameSpec{},
                                      const BandLayout& layout =
                                          BandLayout::bark_default(),
                                      int n_threads = 1) {
  validate(clip);
  validate(spec);
  validate(layout);
  require(n_threads >= 1, "extract_features: thread count must be >= 1");
  require(clip.samples.size() >= static_cast<size_t>(spec.window),
          "extract_features: clip shorter than one analysis window");

  const int count = frame_count(clip.samples.size(), spec);
  const std::vector<double> window = hann_window(spec.window);

  std::vector<std::array<double, kNumBands>> cepstra(
      static_cast<size_t>(count));
  PitchTrack track;
  track.frames.resize(static_cast<size_t>(count));

  auto run_range = [&](int lo, int hi) {
    PitchScratch scratch;
    for (int t = lo; t < hi; ++t) {
      const std::vector<double> frame = windowed_frame(clip, spec, t, window);
      cepstra[t] = cepstrum_from_bands(band_energies(frame, layout, spec));
      track.frames[t] = estimate_pitch_frame(clip, spec, t, scratch);
    }
  };

  if (n_threads == 1 || count < 2 * n_threads) {
    run_range(0, count);
  } else {
    std::vector<std::thread> workers;
    const int chunk = (count + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(count, lo + chunk);
      if (lo < hi) workers.emplace_back(run_range, lo, hi);
    }
    for (std::thread& th : workers) th.join();
  }

  const ProcessedPitch pitch = process_pitch_track(track);

  ExtractResult result;
  result.all_unvoiced = pitch.all_unvoiced;
  result.pitch_level = pitch.level;
  result.frames.resize(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) {
    result.frames[t].cepstra = cepstra[t];
    result.frames[t].log_pitch_q = pitch.log_pitch_q[t];
    result.frames[t].pitch_corr = pitch.corr[t];
  }
  return result;
}

}  // namespace s2lpc::dsp
