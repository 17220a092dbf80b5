// Combined spectral training loss: absolute MSE on the pre-post-net mel and
// feature predictions, absolute + differential MSE on the post-net feature
// output, weighted 1 / 0.8 / 0.4 / 0.4, plus the end-of-sequence flag
// cross-entropy.
#pragma once

#include <vector>

#include "s2lpc/autodiff.hpp"

namespace s2lpc::train {

using nn::Tape;
using nn::Tensor;
using nn::Value;

constexpr double kMelWeight = 1.0;
constexpr double kLpcPreWeight = 0.8;
constexpr double kLpcPostWeight = 0.4;
constexpr double kLpcDiffWeight = 0.4;

struct SpectralBatch {
  Tensor y_mel;        // T x 80, pre-post-net mel prediction
  Tensor y_lpc;        // T x 22, pre-post-net feature prediction
  Tensor z_lpc;        // T x 22, post-post-net feature prediction
  Tensor q_mel;        // T x 80 target
  Tensor q_lpc;        // T x 22 target
  Tensor stop_logits;  // T
  Tensor stop_targets; // T, values in {0, 1}
};

struct LossValues {
  Value mel;       // unweighted terms
  Value lpc_pre;
  Value lpc_post;
  Value lpc_diff;
  Value stop;
  Value spectral;  // weighted Eq-style combination
  Value total;     // spectral + stop cross-entropy
};

struct LossBreakdown {
  double mel_term = 0.0;
  double lpc_pre_term = 0.0;
  double lpc_post_term = 0.0;
  double lpc_diff_term = 0.0;
  double stop_term = 0.0;
  double spectral = 0.0;
  double total = 0.0;
};

namespace detail {

inline void check_batch_shapes(const Tensor& y_mel, const Tensor& y_lpc,
                               const Tensor& z_lpc, const Tensor& q_mel,
                               const Tensor& q_lpc) {
  require(y_mel.rank() == 2 && y_lpc.rank() == 2 && z_lpc.rank() == 2,
          "spectral loss: predictions must be rank-2 (T x C)");
  const int t = y_mel.rows();
  require(t >= 1, "spectral loss: empty batch");
  require(y_lpc.rows() == t && z_lpc.rows() == t && q_mel.rows() == t &&
              q_lpc.rows() == t,
          "spectral loss: frame counts differ across tensors");
  require(y_mel.same_shape(q_mel), "spectral loss: mel shapes differ");
  require(y_lpc.same_shape(q_lpc) && z_lpc.same_shape(q_lpc),
          "spectral loss: feature shapes differ");
}

// Frame deltas z_t - z_(t-1) for t >= 1; the t = 0 term has no predecessor
// and is skipped. A single-frame batch contributes a zero differential term.
inline Value frame_deltas(Tape& tp, Value m) {
  const int t = tp.value(m).rows();
  if (t < 2) return tp.scalar(0.0);
  return tp.sub(tp.slice_rows(m, 1, t - 1), tp.slice_rows(m, 0, t - 1));
}

}  // namespace detail

// Graph-building form used by the training loop: y/z/q enter as tape values.
inline LossValues combined_loss_graph(Tape& tp, Value y_mel, Value y_lpc,
                                      Value z_lpc, Value q_mel, Value q_lpc,
                                      Value stop_logits, Value stop_targets) {
  detail::check_batch_shapes(tp.value(y_mel), tp.value(y_lpc), tp.value(z_lpc),
                             tp.value(q_mel), tp.value(q_lpc));

  LossValues out;
  out.mel = tp.mse(y_mel, q_mel);
  out.lpc_pre = tp.mse(y_lpc, q_lpc);
  out.lpc_post = tp.mse(z_lpc, q_lpc);

  const int t = tp.value(z_lpc).rows();
  if (t >= 2) {
    out.lpc_diff = tp.mse(detail::frame_deltas(tp, z_lpc),
                          detail::frame_deltas(tp, q_lpc));
  } else {
    out.lpc_diff = tp.scalar(0.0);
  }

  out.spectral = tp.add(
      tp.add(tp.scale(out.mel, kMelWeight), tp.scale(out.lpc_pre, kLpcPreWeight)),
      tp.add(tp.scale(out.lpc_post, kLpcPostWeight),
             tp.scale(out.lpc_diff, kLpcDiffWeight)));

  out.stop = tp.bce_with_logits(stop_logits, stop_targets);
  out.total = tp.add(out.spectral, out.stop);
  return out;
}

inline LossBreakdown read_breakdown(const Tape& tp, const LossValues& v) {
  LossBreakdown b;
  b.mel_term = tp.value(v.mel).at(0);
  b.lpc_pre_term = tp.value(v.lpc_pre).at(0);
  b.lpc_post_term = tp.value(v.lpc_post).at(0);
  b.lpc_diff_term = tp.value(v.lpc_diff).at(0);
  b.stop_term = tp.value(v.stop).at(0);
  b.spectral = tp.value(v.spectral).at(0);
  b.total = tp.value(v.total).at(0);
  return b;
}

// Tensor-level convenience: evaluates the spectral loss (Eq-weighted) and
// the stop term on a concrete batch.
inline LossBreakdown combined_spectral_loss(const SpectralBatch& batch) {
  Tape tp;
  const LossValues v = combined_loss_graph(
      tp, tp.constant(batch.y_mel), tp.constant(batch.y_lpc),
      tp.constant(batch.z_lpc), tp.constant(batch.q_mel),
      tp.constant(batch.q_lpc), tp.constant(batch.stop_logits),
      tp.constant(batch.stop_targets));
  return read_breakdown(tp, v);
}

inline double total_loss(const SpectralBatch& batch) {
  return combined_spectral_loss(batch).total;
}

}  // namespace s2lpc::train
