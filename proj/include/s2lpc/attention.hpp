// Attention stack: content+location initial attention, then the augmented
// stage - candidate construction, structure-fit scoring with a confined-log
// penalty, and single-stage soft-selection over any number of candidates.
#pragma once

#include <algorithm>
#include <vector>

#include "s2lpc/autodiff.hpp"

namespace s2lpc::attn {

using nn::Tape;
using nn::Value;

constexpr double kConfinedLogFloor = -50.0;

// max(log(x), -50); gradient is zero on the clamped branch.
inline Value confined_log(Tape& tp, Value x) {
  return tp.max_const(tp.log_(x), kConfinedLogFloor);
}

// Unimodality / peak-sharpness score in [0, 1]: the peak value times the
// alignment mass within +-radius of the peak. One-hot vectors score exactly
// 1; flat or multimodal vectors are penalized; the all-zero vector scores 0.
inline Value structure_fit(Tape& tp, Value c, int radius = 2) {
  const nn::Tensor& x = tp.value(c);
  require(x.rank() == 1, "structure_fit: rank-1 alignment required");
  for (double v : x.v)
    require(v >= 0.0 && std::isfinite(v),
            "structure_fit: alignment must be nonnegative and finite");
  int peak_idx = 0;
  for (int i = 1; i < x.size(); ++i)
    if (x.at(i) > x.at(peak_idx)) peak_idx = i;
  // fixed-width window (2*radius + 1 bins) shifted inside the bounds
  const int width = std::min(x.size(), 2 * radius + 1);
  const int lo = std::clamp(peak_idx - radius, 0, x.size() - width);

  Value peak = tp.max_reduce(c);
  Value mass = tp.sum(tp.slice(c, lo, width));
  Value f = tp.mul(peak, mass);
  // clamp to 1 for inputs with mass > 1; inactive for alignment vectors
  return tp.scale(tp.max_const(tp.scale(f, -1.0), -1.0), -1.0);
}

// Plain-number evaluation of the same score, for inspecting alignments
// outside a tape (training diagnostics, tests).
inline double structure_fit_value(const std::vector<double>& c,
                                  int radius = 2) {
  if (c.empty()) return 0.0;
  int peak = 0;
  for (size_t i = 1; i < c.size(); ++i)
    if (c[i] > c[static_cast<size_t>(peak)]) peak = static_cast<int>(i);
  const int n = static_cast<int>(c.size());
  const int width = std::min(n, 2 * radius + 1);
  const int lo = std::clamp(peak - radius, 0, n - width);
  double mass = 0.0;
  for (int i = lo; i < lo + width; ++i) mass += c[static_cast<size_t>(i)];
  return std::min(1.0, c[static_cast<size_t>(peak)] * mass);
}

// Candidate set {b_t, b_prev, b_prev shifted one step toward higher n}.
// The shift zero-fills position 0 and drops mass off the high end.
inline std::vector<Value> candidate_set(Tape& tp, Value b_t, Value b_prev) {
  const int n = tp.value(b_t).size();
  require(tp.value(b_prev).size() == n,
          "candidate_set: alignment lengths differ");
  Value shifted;
  if (n == 1) {
    shifted = tp.constant(nn::Tensor({1}));
  } else {
    Value zero = tp.constant(nn::Tensor({1}));
    shifted = tp.concat({zero, tp.slice(b_prev, 0, n - 1)});
  }
  return {b_t, b_prev, shifted};
}

// Adds one more shift to an existing candidate list (for K > 3 selection).
inline Value shift_forward(Tape& tp, Value a) {
  const int n = tp.value(a).size();
  if (n == 1) return tp.constant(nn::Tensor({1}));
  Value zero = tp.constant(nn::Tensor({1}));
  return tp.concat({zero, tp.slice(a, 0, n - 1)});
}

struct SoftSelection {
  Value weights;    // K soft-selection weights, sums to 1
  Value alignment;  // final alignment a = sum_k alpha_k c_k
  Value penalties;  // K confined-log structure-fit penalties
};

// alpha = softmax(FC(S) + p) with S = concat(s_p, x_c, h_c) and
// p_k = confined_log(structure_fit(c_k)); a = sum_k alpha_k c_k.
inline SoftSelection soft_select(Tape& tp, const std::vector<Value>& candidates,
                                 Value s_p, Value x_c, Value h_c, Value fc_w,
                                 Value fc_b) {
  const int k = static_cast<int>(candidates.size());
  require(k >= 2, "soft_select: need at least two candidates");
  require(tp.value(fc_w).rank() == 2 && tp.value(fc_w).cols() == k,
          "soft_select: FC output dimension must equal candidate count");
  require(tp.value(fc_b).size() == k,
          "soft_select: FC bias dimension must equal candidate count");

  std::vector<Value> penalties;
  penalties.reserve(static_cast<size_t>(k));
  for (Value c : candidates)
    penalties.push_back(confined_log(tp, structure_fit(tp, c)));
  Value p = tp.concat(penalties);

  Value state = tp.concat({s_p, x_c, h_c});
  Value fc = tp.add(tp.matmul(state, fc_w), fc_b);
  Value alpha = tp.softmax(tp.add(fc, p));

  Value stacked = tp.stack_rows(candidates);
  Value alignment = tp.matmul(alpha, stacked);
  return {alpha, alignment, p};
}

// Context vector: convex combination of the encoder outputs.
inline Value context(Tape& tp, Value alignment, Value encodings) {
  const nn::Tensor& a = tp.value(alignment);
  const nn::Tensor& m = tp.value(encodings);
  require(m.rank() == 2 && a.rank() == 1 && a.size() == m.rows(),
          "context: alignment length must match encoding count");
  return tp.matmul(alignment, encodings);
}

struct InitialAttentionParams {
  Value query_w;   // Dq x A
  Value memory_w;  // Dm x A
  Value loc_conv_w;  // (K*1) x F
  Value loc_conv_b;  // F
  Value loc_w;     // F x A
  Value energy_v;  // A
  Value energy_b;  // A
  int loc_kernel = 31;
};

// Content + location attention: softmax over
// v . tanh(W_m m_n + W_q q + W_f conv(cumulative)_n + b).
inline Value initial_attention(Tape& tp, const InitialAttentionParams& p,
                               Value query, Value memory, Value processed_memory,
                               Value cumulative) {
  const nn::Tensor& m = tp.value(memory);
  require(m.rank() == 2 && m.rows() >= 1,
          "initial_attention: non-empty encoder sequence required");
  const int n = m.rows();
  require(tp.value(cumulative).size() == n,
          "initial_attention: cumulative alignment length mismatch");

  Value q_row = tp.matmul(query, p.query_w);               // A
  Value loc_in = tp.reshape(cumulative, {n, 1});           // N x 1
  Value loc_feat = tp.conv1d(loc_in, p.loc_conv_w, p.loc_conv_b,
                             p.loc_kernel);                // N x F
  Value loc_term = tp.matmul(loc_feat, p.loc_w);           // N x A

  Value pre = tp.add(tp.add(processed_memory, loc_term), q_row);  // N x A + row
  Value pre_b = tp.add(pre, p.energy_b);
  Value energies = tp.matmul(tp.tanh_(pre_b), p.energy_v);  // N
  return tp.softmax(energies);
}

}  // namespace s2lpc::attn
