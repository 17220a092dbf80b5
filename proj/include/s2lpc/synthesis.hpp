// Autoregressive synthesis: runs the decoder until the stop flag fires (or
// a frame cap), applies the feature post-nets over the whole utterance, and
// exposes the alignment matrix for inspection.
#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "s2lpc/model.hpp"

namespace s2lpc::model {

struct SynthesisResult {
  std::vector<std::vector<double>> lpc_features;  // T x 22, post-post-net
  std::vector<std::vector<double>> mel;           // T x 80
  std::vector<std::vector<double>> alignment;     // T x N
  int frames = 0;
  bool stopped_naturally = false;  // false means the frame cap truncated it
};

inline SynthesisResult synthesize(const Model& m,
                                  const std::vector<int>& symbols,
                                  double offset_pace, double offset_expr,
                                  int max_frames = 500) {
  require(max_frames >= 1, "synthesize: max_frames must be positive");
  Tape tp;
  const BoundParams p = m.bind(tp, false);

  // offsets are added to the normalized-zero prosody baseline
  ProsodyInfo prosody{offset_pace, offset_expr};
  Value memory = m.encode(tp, p, symbols, prosody);
  Value proc = m.processed_memory(tp, p, memory);
  DecoderStepState state = m.initial_state(tp, static_cast<int>(symbols.size()));

  SynthesisResult out;
  std::vector<Value> lpc_rows;
  Value prev_mel;  // invalid at t = 0

  for (int t = 0; t < max_frames; ++t) {
    Value feedback;
    if (!prev_mel.valid()) {
      feedback = m.go_frame(tp);
    } else if (m.config().double_feedback) {
      feedback = tp.concat({prev_mel, prev_mel});
    } else {
      feedback = prev_mel;
    }

    DecoderStepOutput step =
        m.decoder_step(tp, p, state, feedback, memory, proc, false, 0);
    prev_mel = step.y_mel;
    lpc_rows.push_back(step.y_lpc);
    out.mel.push_back(tp.value(step.y_mel).v);
    out.alignment.push_back(tp.value(step.alignment).v);
    ++out.frames;

    const double stop_prob =
        1.0 / (1.0 + std::exp(-tp.value(step.stop_logit).at(0)));
    if (stop_prob > 0.5) {
      out.stopped_naturally = true;
      break;
    }
  }

  Value refined = m.postnet_refine(tp, p, tp.stack_rows(lpc_rows));
  const Tensor& z = tp.value(refined);
  out.lpc_features.assign(static_cast<size_t>(z.rows()),
                          std::vector<double>(static_cast<size_t>(z.cols())));
  for (int t = 0; t < z.rows(); ++t)
    for (int c = 0; c < z.cols(); ++c) out.lpc_features[t][c] = z.at(t, c);
  return out;
}

// Plain-text alignment grid: one decoder step per line, weights in input
// order, for offline inspection.
inline std::string alignment_grid(const SynthesisResult& r) {
  std::ostringstream out;
  for (const auto& row : r.alignment) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace s2lpc::model
