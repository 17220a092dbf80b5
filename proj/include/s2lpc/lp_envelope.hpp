// Linear-prediction parameter estimation: Levinson-Durbin on an
// autocorrelation sequence, reached either from the 20 band cepstra or
// directly from an 80-channel mel frame (smoothing + mel-to-linear
// resampling of the log spectrum).
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "s2lpc/band_cepstrum.hpp"
#include "s2lpc/common.hpp"
#include "s2lpc/mel.hpp"

namespace s2lpc::lpc {

constexpr int kDefaultLpOrder = 16;

// Coefficients of A(z) = 1 - sum a_i z^-i, reflection coefficients and the
// final prediction error from the Levinson recursion.
struct LpFilter {
  int order = 0;
  std::vector<double> coefficients;
  std::vector<double> reflection;
  double prediction_error = 0.0;
};

inline LpFilter levinson(const std::vector<double>& autocorr) {
  require(autocorr.size() >= 2, "levinson: need order >= 1");
  for (double r : autocorr)
    require(std::isfinite(r), "levinson: non-finite autocorrelation");
  require(autocorr[0] > 0.0, "levinson: autocorr[0] must be positive");

  const int order = static_cast<int>(autocorr.size()) - 1;
  LpFilter f;
  f.order = order;
  f.coefficients.assign(static_cast<size_t>(order), 0.0);
  f.reflection.assign(static_cast<size_t>(order), 0.0);

  std::vector<double> a(static_cast<size_t>(order), 0.0);
  std::vector<double> prev(static_cast<size_t>(order), 0.0);
  double err = autocorr[0];

  for (int i = 1; i <= order; ++i) {
    double acc = autocorr[i];
    for (int j = 1; j < i; ++j) acc -= a[j - 1] * autocorr[i - j];
    const double k = acc / err;
    if (!(std::abs(k) < 1.0)) {
      throw Error("levinson: non-positive-definite autocorrelation at stage " +
                  std::to_string(i) + " (|k| = " + std::to_string(std::abs(k)) +
                  ")");
    }
    f.reflection[i - 1] = k;
    prev = a;
    a[i - 1] = k;
    for (int j = 1; j < i; ++j) a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    err *= (1.0 - k * k);
  }

  f.coefficients = a;
  f.prediction_error = err;
  return f;
}

namespace detail {

// Autocorrelation r[0..order] of the symmetric extension of a one-sided
// power spectrum (length n_fft/2 + 1).
inline std::vector<double> autocorr_from_power(const std::vector<double>& power,
                                               int n_fft, int order) {
  std::vector<double> r(static_cast<size_t>(order) + 1, 0.0);
  for (int m = 0; m <= order; ++m) {
    double sum = power[0];
    for (int k = 1; k < n_fft / 2; ++k)
      sum += 2.0 * power[k] * std::cos(2.0 * kPi * k * m / n_fft);
    sum += power[n_fft / 2] * std::cos(kPi * m);
    r[m] = sum / n_fft;
  }
  // tiny white-noise floor keeps degenerate spectra positive definite
  r[0] *= (1.0 + 1e-6);
  return r;
}

// Piecewise-linear interpolation of (x, y) samples onto query points, with
// constant extrapolation outside the sampled range.
inline std::vector<double> interp_linear(const std::vector<double>& x,
                                         const std::vector<double>& y,
                                         const std::vector<double>& q) {
  std::vector<double> out(q.size());
  size_t seg = 0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double f = q[i];
    if (f <= x.front()) {
      out[i] = y.front();
      continue;
    }
    if (f >= x.back()) {
      out[i] = y.back();
      continue;
    }
    while (seg + 2 < x.size() && x[seg + 1] < f) ++seg;
    const double t = (f - x[seg]) / (x[seg + 1] - x[seg]);
    out[i] = y[seg] + t * (y[seg + 1] - y[seg]);
  }
  return out;
}

}  // namespace detail

// Band cepstra -> per-bin power envelope -> autocorrelation -> Levinson.
// Log energies are interpolated between band centers, constant at the edges.
inline LpFilter lp_from_cepstrum(const std::array<double, dsp::kNumBands>& cepstra,
                                 const dsp::BandLayout& layout,
                                 const dsp::FrameSpec& spec = dsp::FrameSpec{},
                                 int order = kDefaultLpOrder) {
  require(order >= 1, "lp_from_cepstrum: order must be >= 1");
  dsp::validate(layout);
  const std::array<double, dsp::kNumBands> bands =
      dsp::bands_from_cepstrum(cepstra);

  std::vector<double> centers_hz(dsp::kNumBands);
  std::vector<double> log_energy(dsp::kNumBands);
  for (int b = 0; b < dsp::kNumBands; ++b) {
    centers_hz[b] = 0.5 * (layout.edges_hz[b] + layout.edges_hz[b + 1]);
    log_energy[b] = std::log(std::max(bands[b], kLogFloor));
  }

  const int n_bins = spec.fft_size / 2 + 1;
  std::vector<double> bin_hz(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k)
    bin_hz[k] = static_cast<double>(k) * dsp::kSampleRate / spec.fft_size;

  const std::vector<double> log_bins =
      detail::interp_linear(centers_hz, log_energy, bin_hz);
  std::vector<double> power(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k) power[k] = std::exp(log_bins[k]);

  return levinson(detail::autocorr_from_power(power, spec.fft_size, order));
}

// Mel log energies -> 3-channel moving-average smoothing -> mel-to-linear
// resampling -> power envelope -> autocorrelation -> Levinson.
inline LpFilter lp_from_mel(const dsp::MelFrame& mel,
                            const dsp::MelConfig& cfg = dsp::MelConfig{},
                            int order = kDefaultLpOrder) {
  require(static_cast<int>(mel.size()) == cfg.n_channels,
          "lp_from_mel: mel frame has wrong channel count");
  for (double v : mel)
    require(std::isfinite(v), "lp_from_mel: non-finite mel energy");
  require(order >= 1, "lp_from_mel: order must be >= 1");

  const int n = cfg.n_channels;
  std::vector<double> smooth(static_cast<size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double lo = mel[static_cast<size_t>(std::max(0, m - 1))];
    const double hi = mel[static_cast<size_t>(std::min(n - 1, m + 1))];
    smooth[m] = (lo + mel[m] + hi) / 3.0;
  }

  const std::vector<double> centers_hz = dsp::mel_centers_hz(cfg);
  const int n_bins = cfg.fft_size / 2 + 1;
  std::vector<double> bin_hz(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k)
    bin_hz[k] = static_cast<double>(k) * dsp::kSampleRate / cfg.fft_size;

  const std::vector<double> log_bins =
      detail::interp_linear(centers_hz, smooth, bin_hz);
  std::vector<double> power(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k) power[k] = std::exp(log_bins[k]);

  return levinson(detail::autocorr_from_power(power, cfg.fft_size, order));
}

// Log-spectral distortion (dB RMS over a one-sided grid) between the LP
// envelopes of two filters with matching gain conventions.
inline double log_spectral_distortion(const LpFilter& a, const LpFilter& b,
                                      int grid = 256) {
  auto envelope_db = [grid](const LpFilter& f) {
    std::vector<double> db(static_cast<size_t>(grid));
    for (int i = 0; i < grid; ++i) {
      const double w = kPi * i / grid;
      double re = 1.0, im = 0.0;
      for (int k = 1; k <= f.order; ++k) {
        re -= f.coefficients[k - 1] * std::cos(w * k);
        im += f.coefficients[k - 1] * std::sin(w * k);
      }
      const double mag2 = std::max(re * re + im * im, 1e-300);
      db[i] = -10.0 * std::log10(mag2) +
              10.0 * std::log10(std::max(f.prediction_error, 1e-300));
    }
    return db;
  };
  const std::vector<double> da = envelope_db(a);
  const std::vector<double> dbv = envelope_db(b);
  double acc = 0.0;
  for (int i = 0; i < grid; ++i) acc += (da[i] - dbv[i]) * (da[i] - dbv[i]);
  return std::sqrt(acc / grid);
}

}  // namespace s2lpc::lpc
