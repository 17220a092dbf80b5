// Teacher-forced training: per-utterance graph building, the combined
// spectral + stop loss, Adam updates with global-norm clipping, prosody
// observation estimators, and a deterministic synthetic toy corpus.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "s2lpc/loss.hpp"
#include "s2lpc/model.hpp"
#include "s2lpc/pitch.hpp"

namespace s2lpc::train {

struct Utterance {
  std::vector<int> symbols;
  Tensor mel;  // T x 80 targets
  Tensor lpc;  // T x 22 targets
  model::ProsodyInfo prosody;  // normalized observations
};

// ---- prosody observations ----

struct RawProsody {
  double log_duration = 0.0;    // log(mean frames per symbol)
  double log_pitch_span = 0.0;  // p95 - p5 of voiced log pitch
};

struct ProsodyStats {
  double mean_duration = 0.0, std_duration = 0.0;
  double mean_span = 0.0, std_span = 0.0;
  int count = 0;
};

namespace detail {

// linear-interpolated quantile of a sorted sample
inline double quantile(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// features: T x 22 frame-major track (20 cepstra, log pitch, correlation).
// Voicing for the pitch-span percentiles follows the extractor's threshold.
inline RawProsody raw_prosody_observations(const Tensor& features,
                                           int n_symbols) {
  require(features.rank() == 2 && features.cols() == 22,
          "prosody observations: expected a T x 22 feature track");
  require(n_symbols >= 1, "prosody observations: empty symbol sequence");
  const int t = features.rows();
  require(t >= 1, "prosody observations: empty feature track");

  RawProsody out;
  out.log_duration = std::log(static_cast<double>(t) / n_symbols);

  std::vector<double> voiced_pitch;
  for (int i = 0; i < t; ++i)
    if (features.at(i, 21) >= dsp::kVoicingThreshold)
      voiced_pitch.push_back(features.at(i, 20));
  if (voiced_pitch.empty()) {
    out.log_pitch_span = 0.0;
    return out;
  }
  std::sort(voiced_pitch.begin(), voiced_pitch.end());
  out.log_pitch_span = detail::quantile(voiced_pitch, 0.95) -
                       detail::quantile(voiced_pitch, 0.05);
  return out;
}

inline ProsodyStats compute_prosody_stats(const std::vector<RawProsody>& raw) {
  require(!raw.empty(), "prosody stats: empty corpus");
  ProsodyStats s;
  s.count = static_cast<int>(raw.size());
  for (const RawProsody& r : raw) {
    s.mean_duration += r.log_duration;
    s.mean_span += r.log_pitch_span;
  }
  s.mean_duration /= s.count;
  s.mean_span /= s.count;
  for (const RawProsody& r : raw) {
    s.std_duration += (r.log_duration - s.mean_duration) *
                      (r.log_duration - s.mean_duration);
    s.std_span += (r.log_pitch_span - s.mean_span) *
                  (r.log_pitch_span - s.mean_span);
  }
  s.std_duration = std::sqrt(s.std_duration / s.count);
  s.std_span = std::sqrt(s.std_span / s.count);
  return s;
}

// z-score against corpus statistics; a constant corpus normalizes to 0
inline model::ProsodyInfo prosody_observations(const RawProsody& raw,
                                               const ProsodyStats& stats) {
  require(stats.count >= 1, "prosody observations: empty corpus statistics");
  model::ProsodyInfo p;
  p.log_duration = stats.std_duration > 1e-12
                       ? (raw.log_duration - stats.mean_duration) /
                             stats.std_duration
                       : 0.0;
  p.log_pitch_span =
      stats.std_span > 1e-12
          ? (raw.log_pitch_span - stats.mean_span) / stats.std_span
          : 0.0;
  return p;
}

// ---- teacher-forced graph ----

struct TrainingGraph {
  LossValues loss;
  std::vector<std::vector<double>> alignments;  // T x N, final alignments
  model::BoundParams bound;
};

inline uint64_t dropout_salt(uint64_t seed, int step, int t) {
  uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  h ^= static_cast<uint64_t>(step) * 0xff51afd7ed558ccdull;
  h ^= static_cast<uint64_t>(t) * 0xc4ceb9fe1a85ec53ull;
  return h;
}

// Pure teacher forcing with double feedback: the feedback vector is the
// previous target frame concatenated with the previous predicted frame.
inline TrainingGraph build_training_graph(Tape& tp, const model::Model& m,
                                          const Utterance& utt, bool with_grad,
                                          bool training_mode, uint64_t seed,
                                          int step) {
  const model::ModelConfig& cfg = m.config();
  require(utt.mel.rank() == 2 && utt.mel.cols() == cfg.dims.mel_dim,
          "training: mel targets must be T x 80");
  require(utt.lpc.rank() == 2 && utt.lpc.cols() == cfg.dims.lpc_dim,
          "training: feature targets must be T x 22");
  require(utt.mel.rows() == utt.lpc.rows(),
          "training: target frame counts differ");
  const int T = utt.mel.rows();
  require(T >= 1, "training: empty utterance");

  TrainingGraph g;
  g.bound = m.bind(tp, with_grad);

  Value memory = m.encode(tp, g.bound, utt.symbols, utt.prosody);
  Value proc = m.processed_memory(tp, g.bound, memory);
  model::DecoderStepState state =
      m.initial_state(tp, static_cast<int>(utt.symbols.size()));

  std::vector<Value> y_mel_rows, y_lpc_rows, stop_logits;
  Value prev_pred;  // previous predicted mel frame
  for (int t = 0; t < T; ++t) {
    Value feedback;
    if (t == 0) {
      feedback = m.go_frame(tp);
    } else {
      Tensor prev_target({cfg.dims.mel_dim});
      for (int c = 0; c < cfg.dims.mel_dim; ++c)
        prev_target.at(c) = utt.mel.at(t - 1, c);
      Value target_v = tp.constant(std::move(prev_target));
      feedback = cfg.double_feedback ? tp.concat({target_v, prev_pred})
                                     : target_v;
    }
    model::DecoderStepOutput out =
        m.decoder_step(tp, g.bound, state, feedback, memory, proc,
                       training_mode, dropout_salt(seed, step, t));
    prev_pred = out.y_mel;
    y_mel_rows.push_back(out.y_mel);
    y_lpc_rows.push_back(out.y_lpc);
    stop_logits.push_back(out.stop_logit);
    g.alignments.push_back(tp.value(out.alignment).v);
  }

  Value y_mel = tp.stack_rows(y_mel_rows);
  Value y_lpc = tp.stack_rows(y_lpc_rows);
  Value z_lpc = m.postnet_refine(tp, g.bound, y_lpc);
  Value stops = tp.concat(stop_logits);

  Tensor stop_targets({T});
  stop_targets.at(T - 1) = 1.0;

  g.loss = combined_loss_graph(tp, y_mel, y_lpc, z_lpc,
                               tp.constant(utt.mel), tp.constant(utt.lpc),
                               stops, tp.constant(stop_targets));
  return g;
}

// ---- optimizer and loop ----

struct TrainConfig {
  int steps = 1000;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;
  uint64_t seed = 1;
  std::string loss_log_path;  // CSV written when non-empty
};

struct StepLog {
  int step = 0;
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<StepLog> curve;
  int steps_done = 0;
  bool aborted_on_nan = false;
};

inline void write_loss_csv(const std::string& path,
                           const std::vector<StepLog>& curve) {
  std::ofstream out(path);
  require(out.good(), "cannot write loss log: " + path);
  out << "step,mel,lpc_pre,lpc_post,lpc_diff,stop,total\n";
  for (const StepLog& s : curve) {
    out << s.step << ',' << s.loss.mel_term << ',' << s.loss.lpc_pre_term
        << ',' << s.loss.lpc_post_term << ',' << s.loss.lpc_diff_term << ','
        << s.loss.stop_term << ',' << s.loss.total << '\n';
  }
}

inline TrainResult train(model::Model& m, const std::vector<Utterance>& corpus,
                         const TrainConfig& tc) {
  require(!corpus.empty(), "train: empty corpus");
  require(tc.steps >= 1, "train: step count must be positive");

  auto& params = m.params().items();
  std::vector<Tensor> adam_m, adam_v;
  adam_m.reserve(params.size());
  adam_v.reserve(params.size());
  for (const auto& [name, t] : params) {
    adam_m.emplace_back(t.shape);
    adam_v.emplace_back(t.shape);
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  TrainResult result;
  std::vector<Tensor> snapshot;  // last good parameter values

  for (int step = 0; step < tc.steps; ++step) {
    const Utterance& utt = corpus[static_cast<size_t>(step) % corpus.size()];

    Tape tp;
    TrainingGraph g =
        build_training_graph(tp, m, utt, true, true, tc.seed, step);
    const LossBreakdown breakdown = read_breakdown(tp, g.loss);
    if (!std::isfinite(breakdown.total)) {
      if (!snapshot.empty())
        for (size_t i = 0; i < params.size(); ++i)
          params[i].second = snapshot[i];
      result.aborted_on_nan = true;
      break;
    }

    tp.backward(g.loss.total);

    // collect gradients and the global norm
    double norm_sq = 0.0;
    std::vector<const Tensor*> grads(params.size());
    bool grad_finite = true;
    for (size_t i = 0; i < params.size(); ++i) {
      grads[i] = &tp.grad(g.bound.at(params[i].first));
      for (double x : grads[i]->v) {
        if (!std::isfinite(x)) grad_finite = false;
        norm_sq += x * x;
      }
    }
    if (!grad_finite) {
      if (!snapshot.empty())
        for (size_t i = 0; i < params.size(); ++i)
          params[i].second = snapshot[i];
      result.aborted_on_nan = true;
      break;
    }

    snapshot.clear();
    snapshot.reserve(params.size());
    for (const auto& [name, t] : params) snapshot.push_back(t);

    const double norm = std::sqrt(norm_sq);
    const double clip_scale =
        norm > tc.grad_clip ? tc.grad_clip / norm : 1.0;

    const double t_adam = step + 1;
    const double bc1 = 1.0 - std::pow(beta1, t_adam);
    const double bc2 = 1.0 - std::pow(beta2, t_adam);
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor& w = params[i].second;
      const Tensor& gr = *grads[i];
      for (int j = 0; j < w.size(); ++j) {
        const double gj = gr.at(j) * clip_scale;
        adam_m[i].at(j) = beta1 * adam_m[i].at(j) + (1.0 - beta1) * gj;
        adam_v[i].at(j) = beta2 * adam_v[i].at(j) + (1.0 - beta2) * gj * gj;
        const double mhat = adam_m[i].at(j) / bc1;
        const double vhat = adam_v[i].at(j) / bc2;
        w.at(j) -= tc.learning_rate * mhat / (std::sqrt(vhat) + eps);
      }
    }

    result.curve.push_back({step + 1, breakdown});
    result.steps_done = step + 1;
  }

  if (!tc.loss_log_path.empty()) write_loss_csv(tc.loss_log_path, result.curve);
  return result;
}

// ---- synthetic toy corpus ----

enum class ToyCorpusKind {
  kUniformPace,  // three distinct sequences, equal pace: observations are 0
  kPaced,        // same sequence at 2/3/4 frames per symbol
};

struct ToyCorpus {
  std::vector<Utterance> utterances;
  int vocab = 0;
  std::vector<std::string> symbol_names;
};

namespace detail {

// per-symbol spectral templates: smooth bumps at symbol-specific positions,
// with a small within-symbol wiggle acting as a frame clock
inline double mel_template(int symbol, int channel, int frame_in_symbol) {
  const double center = 8.0 + 8.5 * symbol;
  const double d = (channel - center) / 6.0;
  const double bump = 1.6 * std::exp(-0.5 * d * d);
  const double wiggle =
      0.1 * std::sin(2.1 * frame_in_symbol + 0.9 * symbol + 0.3 * channel);
  return -0.6 + bump + wiggle;
}

inline double cep_template(int symbol, int k, int frame_in_symbol) {
  const double center = (symbol % 8) * 2.6;
  const double d = (k - center) / 2.0;
  const double bump = 1.2 * std::exp(-0.5 * d * d);
  const double wiggle = 0.04 * std::sin(1.7 * frame_in_symbol + symbol + k);
  return -0.4 + bump + wiggle;
}

inline Utterance make_utterance(const std::vector<int>& symbols,
                                int frames_per_symbol) {
  const int n = static_cast<int>(symbols.size());
  const int T = n * frames_per_symbol;
  Utterance utt;
  utt.symbols = symbols;
  utt.mel = Tensor({T, 80});
  utt.lpc = Tensor({T, 22});

  const double lp_lo = std::log(110.0), lp_hi = std::log(220.0);
  for (int t = 0; t < T; ++t) {
    const int sym = symbols[t / frames_per_symbol];
    const int fis = t % frames_per_symbol;
    for (int c = 0; c < 80; ++c) utt.mel.at(t, c) = mel_template(sym, c, fis);
    for (int k = 0; k < 20; ++k) utt.lpc.at(t, k) = cep_template(sym, k, fis);
    // arithmetic log-pitch ramp: its p95 - p5 span is length-independent,
    // so equal-range utterances normalize to a zero span observation
    const double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    utt.lpc.at(t, 20) = lp_lo + frac * (lp_hi - lp_lo);
    utt.lpc.at(t, 21) = 0.9;
  }
  return utt;
}

}  // namespace detail

inline ToyCorpus make_toy_corpus(ToyCorpusKind kind, uint64_t seed) {
  std::mt19937_64 rng(seed);
  ToyCorpus corpus;
  corpus.vocab = 8;
  for (int s = 0; s < corpus.vocab; ++s)
    corpus.symbol_names.push_back("s" + std::to_string(s));

  // Symbols are unique within an utterance (content attention stays
  // unambiguous) and interleaved from the low and high template halves so
  // every adjacent pair is acoustically far apart - sharp boundaries for
  // the attention to lock onto.
  auto random_sequence = [&](int length) {
    std::vector<int> pool(static_cast<size_t>(corpus.vocab));
    for (int i = 0; i < corpus.vocab; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<size_t>(length));
    std::sort(pool.begin(), pool.end());
    const size_t high = pool.size() / 2;       // high-half size
    const size_t low = pool.size() - high;     // low-half size
    std::vector<int> seq;
    for (size_t i = 0; i < low; ++i) {
      seq.push_back(pool[i]);
      if (i < high) seq.push_back(pool[low + i]);
    }
    return seq;
  };

  if (kind == ToyCorpusKind::kUniformPace) {
    for (int length : {6, 7, 8})
      corpus.utterances.push_back(
          detail::make_utterance(random_sequence(length), 2));
  } else {
    const std::vector<int> seq = random_sequence(7);
    for (int fps : {2, 3, 4})
      corpus.utterances.push_back(detail::make_utterance(seq, fps));
  }

  // normalized prosody observations from the real estimators
  std::vector<RawProsody> raw;
  raw.reserve(corpus.utterances.size());
  for (const Utterance& u : corpus.utterances)
    raw.push_back(raw_prosody_observations(
        u.lpc, static_cast<int>(u.symbols.size())));
  const ProsodyStats stats = compute_prosody_stats(raw);
  for (size_t i = 0; i < corpus.utterances.size(); ++i)
    corpus.utterances[i].prosody = prosody_observations(raw[i], stats);
  return corpus;
}

}  // namespace s2lpc::train
