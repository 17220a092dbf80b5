// Named gradient-check cases covering every tape primitive plus the
// composite ops the model relies on (LSTM step, softmax-with-bias,
// structure fit, soft selection, combined spectral loss). Points are drawn
// away from kinks: relu/max_const inputs keep a margin from the breakpoint,
// argmax-dependent ops keep a unique peak, log inputs stay positive.
#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "s2lpc/attention.hpp"
#include "s2lpc/grad_check.hpp"
#include "s2lpc/loss.hpp"

namespace gradcases {

using s2lpc::nn::CheckedOp;
using s2lpc::nn::Tape;
using s2lpc::nn::Tensor;
using s2lpc::nn::Value;

struct Case {
  std::string name;
  CheckedOp op;
  std::vector<Tensor> point;
};

namespace detail {

inline Tensor rand_tensor(std::mt19937_64& rng, std::vector<int> shape,
                          double lo = -1.5, double hi = 1.5) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& x : t.v) x = u(rng);
  return t;
}

// values bounded away from `kink` by at least `margin`
inline Tensor rand_away_from(std::mt19937_64& rng, std::vector<int> shape,
                             double kink, double margin) {
  Tensor t = rand_tensor(rng, std::move(shape));
  for (double& x : t.v) {
    if (std::abs(x - kink) < margin)
      x = kink + (x >= kink ? margin : -margin) * 2.0;
  }
  return t;
}

// nonnegative alignment-like vector with a unique, well-separated peak
inline Tensor rand_alignment(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.01, 0.2);
  Tensor t({n});
  double sum = 0.0;
  for (double& x : t.v) {
    x = u(rng);
    sum += x;
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int peak = pick(rng);
  t.at(peak) += 0.8;
  sum += 0.8;
  for (double& x : t.v) x /= sum;
  return t;
}

}  // namespace detail

inline std::vector<Case> build_cases(uint64_t seed) {
  using namespace detail;
  std::mt19937_64 rng(seed);
  std::vector<Case> cases;

  auto unary = [&](const std::string& name, auto fn, Tensor point) {
    cases.push_back({name,
                     [fn](Tape& tp, const std::vector<Value>& in) {
                       return fn(tp, in[0]);
                     },
                     {std::move(point)}});
  };

  unary("sigmoid", [](Tape& tp, Value a) { return tp.sigmoid(a); },
        rand_tensor(rng, {7}));
  unary("tanh", [](Tape& tp, Value a) { return tp.tanh_(a); },
        rand_tensor(rng, {7}));
  unary("relu", [](Tape& tp, Value a) { return tp.relu(a); },
        rand_away_from(rng, {9}, 0.0, 1e-3));
  unary("log", [](Tape& tp, Value a) { return tp.log_(a); },
        rand_tensor(rng, {6}, 0.1, 3.0));
  unary("max_const", [](Tape& tp, Value a) { return tp.max_const(a, 0.25); },
        rand_away_from(rng, {9}, 0.25, 1e-3));
  unary("softmax", [](Tape& tp, Value a) { return tp.softmax(a); },
        rand_tensor(rng, {6}));
  unary("scale", [](Tape& tp, Value a) { return tp.scale(a, -2.7); },
        rand_tensor(rng, {5}));
  unary("sum", [](Tape& tp, Value a) { return tp.sum(a); },
        rand_tensor(rng, {8}));
  unary("mean", [](Tape& tp, Value a) { return tp.mean(a); },
        rand_tensor(rng, {3, 4}));
  unary("max_reduce", [](Tape& tp, Value a) { return tp.max_reduce(a); },
        rand_alignment(rng, 8));
  unary("reshape", [](Tape& tp, Value a) { return tp.reshape(a, {2, 6}); },
        rand_tensor(rng, {12}));
  unary("slice", [](Tape& tp, Value a) { return tp.slice(a, 2, 4); },
        rand_tensor(rng, {9}));
  unary("slice_rows",
        [](Tape& tp, Value a) { return tp.slice_rows(a, 1, 2); },
        rand_tensor(rng, {4, 3}));
  unary("slice_cols",
        [](Tape& tp, Value a) { return tp.slice_cols(a, 1, 2); },
        rand_tensor(rng, {3, 4}));
  unary("dropout",
        [](Tape& tp, Value a) { return tp.dropout(a, 0.4, 1234); },
        rand_tensor(rng, {12}));
  unary("embed_rows",
        [](Tape& tp, Value a) {
          return tp.embed_rows(a, {2, 0, 1, 2});
        },
        rand_tensor(rng, {4, 5}));

  cases.push_back({"add",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.add(in[0], in[1]);
                   },
                   {rand_tensor(rng, {6}), rand_tensor(rng, {6})}});
  cases.push_back({"add_bias",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.add(in[0], in[1]);
                   },
                   {rand_tensor(rng, {4, 3}), rand_tensor(rng, {3})}});
  cases.push_back({"mul",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.mul(in[0], in[1]);
                   },
                   {rand_tensor(rng, {6}), rand_tensor(rng, {6})}});
  cases.push_back({"mul_scalar",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.mul(in[0], in[1]);
                   },
                   {rand_tensor(rng, {6}), rand_tensor(rng, {1})}});
  cases.push_back({"concat",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.concat({in[0], in[1], in[2]});
                   },
                   {rand_tensor(rng, {3}), rand_tensor(rng, {2}),
                    rand_tensor(rng, {4})}});
  cases.push_back({"concat_cols",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.concat_cols({in[0], in[1]});
                   },
                   {rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4})}});
  cases.push_back({"stack_rows",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.stack_rows({in[0], in[1], in[2]});
                   },
                   {rand_tensor(rng, {5}), rand_tensor(rng, {5}),
                    rand_tensor(rng, {5})}});
  cases.push_back({"matmul_mm",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.matmul(in[0], in[1]);
                   },
                   {rand_tensor(rng, {3, 4}), rand_tensor(rng, {4, 2})}});
  cases.push_back({"matmul_vm",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.matmul(in[0], in[1]);
                   },
                   {rand_tensor(rng, {4}), rand_tensor(rng, {4, 3})}});
  cases.push_back({"matmul_mv",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.matmul(in[0], in[1]);
                   },
                   {rand_tensor(rng, {3, 4}), rand_tensor(rng, {4})}});
  cases.push_back({"conv1d",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.conv1d(in[0], in[1], in[2], 5);
                   },
                   {rand_tensor(rng, {7, 3}), rand_tensor(rng, {15, 4}),
                    rand_tensor(rng, {4})}});
  cases.push_back({"mse",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.mse(in[0], in[1]);
                   },
                   {rand_tensor(rng, {4, 5}), rand_tensor(rng, {4, 5})}});
  // soft targets keep the finite-difference probes inside [0, 1]
  cases.push_back({"bce_with_logits",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.bce_with_logits(in[0], in[1]);
                   },
                   {rand_tensor(rng, {6}, -2.0, 2.0),
                    rand_tensor(rng, {6}, 0.1, 0.9)}});

  // softmax with additive bias, the selection-weight form
  cases.push_back({"softmax_with_bias",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return tp.softmax(tp.add(in[0], in[1]));
                   },
                   {rand_tensor(rng, {5}), rand_tensor(rng, {5})}});

  // LSTM cell step
  {
    const int din = 5, h = 4;
    cases.push_back(
        {"lstm_step",
         [h](Tape& tp, const std::vector<Value>& in) {
           s2lpc::nn::LstmCell cell{in[1], in[2], in[3], h};
           s2lpc::nn::LstmState st{in[4], in[5]};
           const auto next = s2lpc::nn::lstm_step(tp, cell, in[0], st);
           return tp.concat({next.h, next.c});
         },
         {rand_tensor(rng, {din}), rand_tensor(rng, {din, 4 * h}),
          rand_tensor(rng, {h, 4 * h}), rand_tensor(rng, {4 * h}),
          rand_tensor(rng, {h}), rand_tensor(rng, {h})}});
  }

  // structure fit away from argmax ties and the confined-log clamp
  cases.push_back({"structure_fit",
                   [](Tape& tp, const std::vector<Value>& in) {
                     return s2lpc::attn::structure_fit(tp, in[0]);
                   },
                   {rand_alignment(rng, 10)}});

  // full soft-selection composite: candidates, state, FC parameters
  {
    const int n = 8, sp = 3, xc = 4, hc = 5, k = 3;
    cases.push_back(
        {"soft_select",
         [](Tape& tp, const std::vector<Value>& in) {
           const std::vector<Value> cands{in[0], in[1], in[2]};
           const auto sel = s2lpc::attn::soft_select(tp, cands, in[3], in[4],
                                                     in[5], in[6], in[7]);
           return tp.concat({sel.weights, sel.alignment});
         },
         {rand_alignment(rng, n), rand_alignment(rng, n), rand_alignment(rng, n),
          rand_tensor(rng, {sp}), rand_tensor(rng, {xc}), rand_tensor(rng, {hc}),
          rand_tensor(rng, {sp + xc + hc, k}), rand_tensor(rng, {k})}});
  }

  // combined spectral loss with respect to the predictions (y_M, y_L, z_L
  // and the stop logits); targets are constants
  {
    const int t = 5;
    Tensor q_mel = rand_tensor(rng, {t, 6});
    Tensor q_lpc = rand_tensor(rng, {t, 4});
    Tensor stop_targets({t}, {0.0, 0.0, 0.0, 0.0, 1.0});
    cases.push_back(
        {"combined_spectral_loss",
         [q_mel, q_lpc, stop_targets](Tape& tp,
                                      const std::vector<Value>& in) {
           const auto v = s2lpc::train::combined_loss_graph(
               tp, in[0], in[1], in[2], tp.constant(q_mel),
               tp.constant(q_lpc), in[3], tp.constant(stop_targets));
           return v.total;
         },
         {rand_tensor(rng, {t, 6}), rand_tensor(rng, {t, 4}),
          rand_tensor(rng, {t, 4}), rand_tensor(rng, {t})}});
  }

  return cases;
}

}  // namespace gradcases
