// Autocorrelation pitch tracker over the 60..360 Hz lag range, plus the
// log-pitch interpolation / clipping / 256-level quantization stage.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "s2lpc/common.hpp"
#include "s2lpc/framing.hpp"

namespace s2lpc::dsp {

constexpr double kVoicingThreshold = 0.3;
constexpr int kPitchLevels = 256;

struct PitchTrack {
  struct Frame {
    double f0_hz = 0.0;  // meaningful only when voiced
    double corr = 0.0;   // maximal normalized autocorrelation, [-1, 1]
    bool voiced = false;
  };
  std::vector<Frame> frames;
};

// Reusable per-worker buffers for frame-wise pitch analysis.
struct PitchScratch {
  std::vector<double> span;
  std::vector<double> sq_prefix;
  std::vector<double> corr;
};

inline int pitch_lag_min(int sample_rate) {
  return static_cast<int>(std::ceil(sample_rate / kPitchMaxHz));
}
inline int pitch_lag_max(int sample_rate) {
  return static_cast<int>(std::floor(sample_rate / kPitchMinHz));
}

// Pitch of frame t from a 2x-window span centered on the frame (zero padded
// at the clip edges). Voiced iff corr >= kVoicingThreshold. An octave guard
// picks the smallest lag whose correlation is within 1% of the maximum; the
// lag is then refined by parabolic interpolation.
inline PitchTrack::Frame estimate_pitch_frame(const AudioClip& clip,
                                              const FrameSpec& spec, int t,
                                              PitchScratch& scratch) {
  constexpr int kSmooth = 8;  // moving-average lowpass, ~2.8 kHz cutoff
  const int raw_len = 2 * spec.window;
  const int span_len = raw_len - (kSmooth - 1);
  const int lag_min = pitch_lag_min(clip.sample_rate);
  const int lag_max = pitch_lag_max(clip.sample_rate);
  const int win = span_len - lag_max - 1;
  require(win > 0, "estimate_pitch: analysis span too short for the lag range");

  scratch.span.resize(static_cast<size_t>(span_len));
  scratch.sq_prefix.resize(static_cast<size_t>(span_len) + 1);
  scratch.corr.assign(static_cast<size_t>(lag_max) + 2, 0.0);
  std::vector<double>& span = scratch.span;
  std::vector<double>& sq_prefix = scratch.sq_prefix;
  std::vector<double>& corr = scratch.corr;

  // 2x-window raw span centered on the frame, zero padded at the edges,
  // then lowpassed. Harmonics above ~2.8 kHz only destabilize the sampled
  // peak heights that the octave guard compares.
  const int n = static_cast<int>(clip.samples.size());
  const int center = t * spec.hop + spec.window / 2;
  auto raw = [&](int i) {
    const int s = center - spec.window + i;
    return (s >= 0 && s < n) ? clip.samples[s] : 0.0;
  };
  double acc = 0.0;
  for (int i = 0; i < kSmooth; ++i) acc += raw(i);
  for (int i = 0; i < span_len; ++i) {
    span[i] = acc / kSmooth;
    acc += raw(i + kSmooth) - raw(i);
  }
  sq_prefix[0] = 0.0;
  for (int i = 0; i < span_len; ++i)
    sq_prefix[i + 1] = sq_prefix[i] + span[i] * span[i];

  const double e0 = sq_prefix[win] - sq_prefix[0];
  double best = -2.0;
  int best_lag = lag_min;
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    double num = 0.0;
    for (int i = 0; i < win; ++i) num += span[i] * span[i + lag];
    const double el = sq_prefix[win + lag] - sq_prefix[lag];
    const double denom = std::sqrt(e0 * el);
    corr[lag] = denom < 1e-12 ? 0.0 : num / denom;
    if (corr[lag] > best) {
      best = corr[lag];
      best_lag = lag;
    }
  }

  // Normalized correlation at a fractional lag (linear signal interpolation).
  auto frac_corr = [&](double lag) {
    const int base = static_cast<int>(std::floor(lag));
    const double f = lag - base;
    double num = 0.0, el = 0.0;
    for (int i = 0; i < win; ++i) {
      const double v = (1.0 - f) * span[i + base] + f * span[i + base + 1];
      num += span[i] * v;
      el += v * v;
    }
    const double denom = std::sqrt(e0 * el);
    return denom < 1e-12 ? 0.0 : num / denom;
  };

  // True peak of a candidate: fine scan one lag around the integer maximum.
  // Sampled peak heights of non-integer periods are otherwise incomparable
  // (the apex of a sharp correlation peak can fall mid-bin).
  auto refine = [&](int lag) -> std::pair<double, double> {
    const double lo = std::max(double(lag_min), lag - 1.0);
    const double hi = std::min(double(lag_max), lag + 1.0);
    double arg = lag, peak = corr[lag];
    for (double x = lo; x <= hi + 1e-9; x += 0.1) {
      const double c = frac_corr(x);
      if (c > peak) {
        peak = c;
        arg = x;
      }
    }
    return {arg, peak};
  };

  // Octave guard: among local maxima of the correlation, prefer the
  // smallest lag whose refined peak is within 1% of the global peak.
  const auto [best_arg, best_peak] = refine(best_lag);
  double lag_pick = best_arg;
  double peak_pick = best_peak;
  const double accept = best_peak - 0.01 * std::abs(best_peak);
  for (int lag = lag_min; lag < best_lag; ++lag) {
    const bool left_ok = lag == lag_min || corr[lag] >= corr[lag - 1];
    const bool right_ok = corr[lag] >= corr[lag + 1];
    if (!left_ok || !right_ok) continue;
    if (corr[lag] < accept - 0.02) continue;  // cannot reach accept when refined
    const auto [arg, peak] = refine(lag);
    if (peak >= accept) {
      lag_pick = arg;
      peak_pick = peak;
      break;
    }
  }

  PitchTrack::Frame out;
  out.corr = std::clamp(peak_pick, -1.0, 1.0);
  out.voiced = out.corr >= kVoicingThreshold;
  out.f0_hz = out.voiced ? clip.sample_rate / lag_pick : 0.0;
  return out;
}

inline PitchTrack estimate_pitch(const AudioClip& clip, const FrameSpec& spec) {
  validate(clip);
  validate(spec);
  require(clip.samples.size() >= static_cast<size_t>(spec.window),
          "estimate_pitch: clip shorter than one analysis window");

  const int count = frame_count(clip.samples.size(), spec);
  PitchTrack track;
  track.frames.resize(static_cast<size_t>(count));
  PitchScratch scratch;
  for (int t = 0; t < count; ++t)
    track.frames[t] = estimate_pitch_frame(clip, spec, t, scratch);
  return track;
}

struct ProcessedPitch {
  std::vector<double> log_pitch_q;  // dequantized, in [log 60, log 360]
  std::vector<int> level;           // quantizer index, 0..255
  std::vector<double> corr;         // negative values replaced by 0
  bool all_unvoiced = false;
};

inline int quantize_log_pitch(double log_pitch) {
  const double lo = log_pitch_lo();
  const double hi = log_pitch_hi();
  const double x = std::clamp(log_pitch, lo, hi);
  const int idx =
      static_cast<int>(std::lround((kPitchLevels - 1) * (x - lo) / (hi - lo)));
  return std::clamp(idx, 0, kPitchLevels - 1);
}

inline double dequantize_log_pitch(int level) {
  const double lo = log_pitch_lo();
  const double hi = log_pitch_hi();
  return lo + level * (hi - lo) / (kPitchLevels - 1);
}

// Interpolates log pitch across unvoiced gaps (edge gaps held at the nearest
// voiced value), clips to [log 60, log 360], quantizes to 256 uniform levels.
// An all-unvoiced track falls back to a constant log 147 and is flagged.
inline ProcessedPitch process_pitch_track(const PitchTrack& track) {
  const int count = static_cast<int>(track.frames.size());
  require(count >= 1, "process_pitch_track: empty track");

  std::vector<int> voiced_idx;
  for (int t = 0; t < count; ++t)
    if (track.frames[t].voiced) voiced_idx.push_back(t);

  ProcessedPitch out;
  out.log_pitch_q.resize(static_cast<size_t>(count));
  out.level.resize(static_cast<size_t>(count));
  out.corr.resize(static_cast<size_t>(count));

  std::vector<double> log_pitch(static_cast<size_t>(count));
  if (voiced_idx.empty()) {
    out.all_unvoiced = true;
    std::fill(log_pitch.begin(), log_pitch.end(), std::log(147.0));
  } else {
    for (int t = 0; t < count; ++t) {
      if (track.frames[t].voiced) {
        log_pitch[t] = std::log(track.frames[t].f0_hz);
        continue;
      }
      const auto next =
          std::lower_bound(voiced_idx.begin(), voiced_idx.end(), t);
      if (next == voiced_idx.begin()) {
        log_pitch[t] = std::log(track.frames[voiced_idx.front()].f0_hz);
      } else if (next == voiced_idx.end()) {
        log_pitch[t] = std::log(track.frames[voiced_idx.back()].f0_hz);
      } else {
        const int hi = *next;
        const int lo = *(next - 1);
        const double a = std::log(track.frames[lo].f0_hz);
        const double b = std::log(track.frames[hi].f0_hz);
        log_pitch[t] = a + (b - a) * (t - lo) / (hi - lo);
      }
    }
  }

  for (int t = 0; t < count; ++t) {
    const int level = quantize_log_pitch(log_pitch[t]);
    out.level[t] = level;
    out.log_pitch_q[t] = dequantize_log_pitch(level);
    out.corr[t] = std::max(0.0, track.frames[t].corr);
  }
  return out;
}

}  // namespace s2lpc::dsp
