// Encoder-decoder acoustic network: convolutional + bidirectional-LSTM
// encoder with prosody conditioning, autoregressive decoder with augmented
// attention, linear backend (mel + stop flag), feed-forward 22-feature head,
// and two parallel convolutional post-nets applied to the feature stream.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "s2lpc/attention.hpp"
#include "s2lpc/autodiff.hpp"

namespace s2lpc::model {

using nn::LstmCell;
using nn::LstmState;
using nn::Tape;
using nn::Tensor;
using nn::Value;

// Utterance-level prosody observations, z-normalized against corpus
// statistics; inference adds user offsets to the zero baseline.
struct ProsodyInfo {
  double log_duration = 0.0;
  double log_pitch_span = 0.0;
};

struct ModelDims {
  int vocab = 0;
  int embed = 64;        // encoder width
  int enc_conv_layers = 3;
  int enc_kernel = 5;
  int prenet = 64;
  int decoder = 128;
  int attention = 64;
  int loc_filters = 8;
  int loc_kernel = 15;
  int head_h1 = 64;      // feature-head hidden sizes
  int head_h2 = 32;
  int post_cep_filters = 32;
  int post_pitch_filters = 16;
  int post_layers = 5;
  int post_kernel = 5;
  int mel_dim = 80;
  int lpc_dim = 22;
  std::string profile = "toy";

  static ModelDims toy(int vocab) {
    ModelDims d;
    d.vocab = vocab;
    return d;
  }

  static ModelDims paper(int vocab) {
    ModelDims d;
    d.vocab = vocab;
    d.embed = 512;
    d.prenet = 256;
    d.decoder = 1024;
    d.attention = 128;
    d.loc_filters = 32;
    d.loc_kernel = 31;
    d.head_h1 = 512;
    d.head_h2 = 256;
    d.post_cep_filters = 512;
    d.post_pitch_filters = 64;
    d.profile = "paper";
    return d;
  }

  int encoding_dim() const { return embed + 2; }  // prosody slots appended
};

inline void validate(const ModelDims& d) {
  require(d.vocab >= 1, "model dims: vocabulary must be non-empty");
  require(d.embed > 0 && d.prenet > 0 && d.decoder > 0 && d.attention > 0 &&
              d.loc_filters > 0 && d.head_h1 > 0 && d.head_h2 > 0 &&
              d.post_cep_filters > 0 && d.post_pitch_filters > 0,
          "model dims: all widths must be positive");
  require(d.embed % 2 == 0, "model dims: encoder width must be even");
  require(d.enc_kernel % 2 == 1 && d.loc_kernel % 2 == 1 &&
              d.post_kernel % 2 == 1,
          "model dims: kernels must be odd");
}

struct ModelConfig {
  ModelDims dims;
  bool double_feedback = true;
  // Candidate source for the augmented attention: the previous initial
  // alignment (as written) or the previous final alignment.
  bool candidates_from_final = false;
  int n_candidates = 3;
  uint64_t seed = 1;

  int feedback_dim() const {
    return dims.mel_dim * (double_feedback ? 2 : 1);
  }
};

// Named parameter tensors in a stable creation order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t) {
    require(index_.find(name) == index_.end(),
            "param store: duplicate parameter " + name);
    index_[name] = items_.size();
    items_.push_back({name, std::move(t)});
    return items_.back().second;
  }

  bool has(const std::string& name) const {
    return index_.find(name) != index_.end();
  }

  Tensor& get(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "param store: unknown parameter " + name);
    return items_[it->second].second;
  }
  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "param store: unknown parameter " + name);
    return items_[it->second].second;
  }

  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor>>& items() const {
    return items_;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Per-tape binding of every parameter, with or without gradients.
struct BoundParams {
  std::unordered_map<std::string, Value> values;
  Value at(const std::string& name) const {
    auto it = values.find(name);
    require(it != values.end(), "bound params: unknown parameter " + name);
    return it->second;
  }
};

struct DecoderStepState {
  LstmState l1, l2;
  Value x_c;        // previous context vector
  Value prev_align; // alignment fed to the candidate set (b or a)
  Value cum_align;  // cumulative alignment for the location features
};

struct DecoderStepOutput {
  Value y_mel;       // mel_dim
  Value y_lpc;       // lpc_dim (pre-post-net)
  Value stop_logit;  // {1}
  Value alignment;         // final a_t
  Value initial_alignment; // b_t
  Value selection;         // soft-selection weights
};

class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_.dims);
    require(cfg_.n_candidates >= 3, "model: need at least three candidates");
    init_params();
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  BoundParams bind(Tape& tp, bool with_grad) const {
    BoundParams bound;
    for (const auto& [name, tensor] : params_.items())
      bound.values[name] = tp.leaf(tensor, with_grad);
    return bound;
  }

  // ---- encoder ----

  // N symbol ids + prosody -> N x (embed + 2) encodings. The two prosody
  // values are appended to every row, so they condition both the attention
  // keys and the decoder context.
  Value encode(Tape& tp, const BoundParams& p, const std::vector<int>& symbols,
               const ProsodyInfo& prosody) const {
    require(!symbols.empty(), "encode: empty symbol sequence");
    const ModelDims& d = cfg_.dims;
    const int n = static_cast<int>(symbols.size());

    Value x = tp.embed_rows(p.at("enc.embed"), symbols);
    for (int i = 0; i < d.enc_conv_layers; ++i) {
      const std::string base = "enc.conv" + std::to_string(i);
      x = tp.relu(tp.conv1d(x, p.at(base + ".w"), p.at(base + ".b"),
                            d.enc_kernel));
    }

    // bidirectional LSTM, half width per direction
    const int h = d.embed / 2;
    LstmCell fwd{p.at("enc.fwd.wx"), p.at("enc.fwd.wh"), p.at("enc.fwd.b"), h};
    LstmCell bwd{p.at("enc.bwd.wx"), p.at("enc.bwd.wh"), p.at("enc.bwd.b"), h};

    std::vector<Value> rows(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t)
      rows[t] = tp.reshape(tp.slice_rows(x, t, 1), {d.embed});

    std::vector<Value> fwd_h(static_cast<size_t>(n));
    LstmState fs{tp.constant(Tensor({h})), tp.constant(Tensor({h}))};
    for (int t = 0; t < n; ++t) {
      fs = lstm_step(tp, fwd, rows[t], fs);
      fwd_h[t] = fs.h;
    }
    std::vector<Value> bwd_h(static_cast<size_t>(n));
    LstmState bs{tp.constant(Tensor({h})), tp.constant(Tensor({h}))};
    for (int t = n - 1; t >= 0; --t) {
      bs = lstm_step(tp, bwd, rows[t], bs);
      bwd_h[t] = bs.h;
    }

    std::vector<Value> enc_rows(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t)
      enc_rows[t] = tp.concat({fwd_h[t], bwd_h[t]});
    Value enc = tp.stack_rows(enc_rows);

    Tensor pros({n, 2});
    for (int t = 0; t < n; ++t) {
      pros.at(t, 0) = prosody.log_duration;
      pros.at(t, 1) = prosody.log_pitch_span;
    }
    return tp.concat_cols({enc, tp.constant(pros)});
  }

  Value processed_memory(Tape& tp, const BoundParams& p, Value memory) const {
    return tp.matmul(memory, p.at("attn.memory_w"));
  }

  // ---- decoder ----

  DecoderStepState initial_state(Tape& tp, int n) const {
    const ModelDims& d = cfg_.dims;
    DecoderStepState s;
    s.l1 = {tp.constant(Tensor({d.decoder})), tp.constant(Tensor({d.decoder}))};
    s.l2 = {tp.constant(Tensor({d.decoder})), tp.constant(Tensor({d.decoder}))};
    s.x_c = tp.constant(Tensor({d.encoding_dim()}));
    Tensor boot({n});
    boot.at(0) = 1.0;  // attention bootstrap at the sequence start
    s.prev_align = tp.constant(boot);
    s.cum_align = tp.constant(Tensor({n}));
    return s;
  }

  Value go_frame(Tape& tp) const {
    return tp.constant(Tensor({cfg_.feedback_dim()}));
  }

  DecoderStepOutput decoder_step(Tape& tp, const BoundParams& p,
                                 DecoderStepState& state, Value feedback,
                                 Value memory, Value proc_memory,
                                 bool training, uint64_t dropout_salt) const {
    const ModelDims& d = cfg_.dims;
    require(tp.value(feedback).size() == cfg_.feedback_dim(),
            "decoder_step: feedback dimension mismatch");

    // pre-net, dropout only during training
    Value s_p = tp.relu(
        tp.add(tp.matmul(feedback, p.at("prenet.fc1.w")), p.at("prenet.fc1.b")));
    if (training) s_p = tp.dropout(s_p, 0.5, dropout_salt * 2 + 1);
    s_p = tp.relu(
        tp.add(tp.matmul(s_p, p.at("prenet.fc2.w")), p.at("prenet.fc2.b")));
    if (training) s_p = tp.dropout(s_p, 0.5, dropout_salt * 2 + 2);

    // initial content+location attention; the query combines the pre-net
    // output (current feedback) with the previous decoder hidden state
    Value query = tp.concat({s_p, state.l2.h});
    attn::InitialAttentionParams ap;
    ap.query_w = p.at("attn.query_w");
    ap.memory_w = p.at("attn.memory_w");
    ap.loc_conv_w = p.at("attn.loc_conv.w");
    ap.loc_conv_b = p.at("attn.loc_conv.b");
    ap.loc_w = p.at("attn.loc_w");
    ap.energy_v = p.at("attn.energy_v");
    ap.energy_b = p.at("attn.energy_b");
    ap.loc_kernel = d.loc_kernel;
    Value b_t = attn::initial_attention(tp, ap, query, memory, proc_memory,
                                        state.cum_align);

    std::vector<Value> cands = attn::candidate_set(tp, b_t, state.prev_align);
    for (int k = 3; k < cfg_.n_candidates; ++k)
      cands.push_back(attn::shift_forward(tp, cands.back()));

    const attn::SoftSelection sel = attn::soft_select(
        tp, cands, s_p, state.x_c, state.l2.h, p.at("sel.w"), p.at("sel.b"));
    Value x_c = attn::context(tp, sel.alignment, memory);

    LstmCell l1{p.at("dec.l1.wx"), p.at("dec.l1.wh"), p.at("dec.l1.b"),
                d.decoder};
    LstmCell l2{p.at("dec.l2.wx"), p.at("dec.l2.wh"), p.at("dec.l2.b"),
                d.decoder};
    state.l1 = lstm_step(tp, l1, tp.concat({s_p, x_c}), state.l1);
    state.l2 = lstm_step(tp, l2, state.l1.h, state.l2);

    Value hx = tp.concat({state.l2.h, x_c});

    DecoderStepOutput out;
    out.y_mel =
        tp.add(tp.matmul(hx, p.at("backend.mel.w")), p.at("backend.mel.b"));
    out.stop_logit =
        tp.add(tp.matmul(hx, p.at("backend.stop.w")), p.at("backend.stop.b"));

    // feature head: two hidden layers with the intermediate tanh
    Value h1 = tp.add(tp.matmul(hx, p.at("head.fc1.w")), p.at("head.fc1.b"));
    Value h2 =
        tp.add(tp.matmul(tp.tanh_(h1), p.at("head.fc2.w")), p.at("head.fc2.b"));
    out.y_lpc = tp.add(tp.matmul(h2, p.at("head.out.w")), p.at("head.out.b"));

    out.alignment = sel.alignment;
    out.initial_alignment = b_t;
    out.selection = sel.weights;

    state.x_c = x_c;
    state.cum_align = tp.add(state.cum_align, sel.alignment);
    state.prev_align = cfg_.candidates_from_final ? sel.alignment : b_t;
    return out;
  }

  // ---- post-nets ----

  // Residual refinement over the whole utterance. The 20 cepstral channels
  // and the 2 pitch channels go through separate conv stacks.
  Value postnet_refine(Tape& tp, const BoundParams& p, Value y_lpc_seq) const {
    const ModelDims& d = cfg_.dims;
    const Tensor& y = tp.value(y_lpc_seq);
    require(y.rank() == 2 && y.cols() == d.lpc_dim,
            "postnet_refine: expected T x 22 feature sequence");
    require(y.rows() >= 1, "postnet_refine: empty sequence");

    auto stack = [&](Value x, const std::string& base) {
      for (int i = 0; i < d.post_layers; ++i) {
        const std::string layer = base + std::to_string(i);
        x = tp.conv1d(x, p.at(layer + ".w"), p.at(layer + ".b"), d.post_kernel);
        if (i + 1 < d.post_layers) x = tp.tanh_(x);
      }
      return x;
    };

    Value cep = tp.slice_cols(y_lpc_seq, 0, 20);
    Value pp = tp.slice_cols(y_lpc_seq, 20, 2);
    Value residual =
        tp.concat_cols({stack(cep, "post.cep.conv"), stack(pp, "post.pp.conv")});
    return tp.add(y_lpc_seq, residual);
  }

 private:
  void init_params() {
    std::mt19937_64 rng(cfg_.seed);
    const ModelDims& d = cfg_.dims;
    const int enc_dim = d.encoding_dim();
    const int h = d.embed / 2;

    add_param(rng, "enc.embed", {d.vocab, d.embed}, d.vocab);
    for (int i = 0; i < d.enc_conv_layers; ++i) {
      const std::string base = "enc.conv" + std::to_string(i);
      add_param(rng, base + ".w", {d.enc_kernel * d.embed, d.embed},
                d.enc_kernel * d.embed);
      add_param(rng, base + ".b", {d.embed}, 0);
    }
    add_lstm(rng, "enc.fwd", d.embed, h);
    add_lstm(rng, "enc.bwd", d.embed, h);

    add_param(rng, "attn.query_w", {d.prenet + d.decoder, d.attention},
              d.prenet + d.decoder);
    add_param(rng, "attn.memory_w", {enc_dim, d.attention}, enc_dim);
    add_param(rng, "attn.loc_conv.w", {d.loc_kernel * 1, d.loc_filters},
              d.loc_kernel);
    add_param(rng, "attn.loc_conv.b", {d.loc_filters}, 0);
    add_param(rng, "attn.loc_w", {d.loc_filters, d.attention}, d.loc_filters);
    add_param(rng, "attn.energy_v", {d.attention}, d.attention);
    add_param(rng, "attn.energy_b", {d.attention}, 0);

    const int sel_in = d.prenet + enc_dim + d.decoder;
    add_param(rng, "sel.w", {sel_in, cfg_.n_candidates}, sel_in);
    add_param(rng, "sel.b", {cfg_.n_candidates}, 0);

    add_param(rng, "prenet.fc1.w", {cfg_.feedback_dim(), d.prenet},
              cfg_.feedback_dim());
    add_param(rng, "prenet.fc1.b", {d.prenet}, 0);
    add_param(rng, "prenet.fc2.w", {d.prenet, d.prenet}, d.prenet);
    add_param(rng, "prenet.fc2.b", {d.prenet}, 0);

    add_lstm(rng, "dec.l1", d.prenet + enc_dim, d.decoder);
    add_lstm(rng, "dec.l2", d.decoder, d.decoder);

    const int hx = d.decoder + enc_dim;
    add_param(rng, "backend.mel.w", {hx, d.mel_dim}, hx);
    add_param(rng, "backend.mel.b", {d.mel_dim}, 0);
    add_param(rng, "backend.stop.w", {hx, 1}, hx);
    // start biased against stopping so early training sees whole utterances
    Tensor stop_b({1});
    stop_b.at(0) = -2.0;
    params_.add("backend.stop.b", std::move(stop_b));

    add_param(rng, "head.fc1.w", {hx, d.head_h1}, hx);
    add_param(rng, "head.fc1.b", {d.head_h1}, 0);
    add_param(rng, "head.fc2.w", {d.head_h1, d.head_h2}, d.head_h1);
    add_param(rng, "head.fc2.b", {d.head_h2}, 0);
    add_param(rng, "head.out.w", {d.head_h2, d.lpc_dim}, d.head_h2);
    add_param(rng, "head.out.b", {d.lpc_dim}, 0);

    add_postnet(rng, "post.cep.conv", 20, d.post_cep_filters);
    add_postnet(rng, "post.pp.conv", 2, d.post_pitch_filters);
  }

  void add_postnet(std::mt19937_64& rng, const std::string& base, int channels,
                   int filters) {
    const ModelDims& d = cfg_.dims;
    for (int i = 0; i < d.post_layers; ++i) {
      const int cin = (i == 0) ? channels : filters;
      const int cout = (i + 1 == d.post_layers) ? channels : filters;
      add_param(rng, base + std::to_string(i) + ".w",
                {d.post_kernel * cin, cout}, d.post_kernel * cin);
      add_param(rng, base + std::to_string(i) + ".b", {cout}, 0);
    }
  }

  void add_lstm(std::mt19937_64& rng, const std::string& base, int in, int h) {
    add_param(rng, base + ".wx", {in, 4 * h}, in);
    add_param(rng, base + ".wh", {h, 4 * h}, h);
    // forget-gate bias starts at 1
    Tensor b({4 * h});
    for (int i = h; i < 2 * h; ++i) b.at(i) = 1.0;
    params_.add(base + ".b", std::move(b));
  }

  // uniform fan-in init; fan_in = 0 marks a zero-initialized bias
  void add_param(std::mt19937_64& rng, const std::string& name,
                 std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    if (fan_in > 0) {
      const double bound = std::sqrt(1.0 / fan_in);
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& x : t.v) x = u(rng);
    }
    params_.add(name, std::move(t));
  }

  ModelConfig cfg_;
  ParamStore params_;
};

}  // namespace s2lpc::model
