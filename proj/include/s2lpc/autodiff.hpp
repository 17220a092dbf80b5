// Reverse-mode tape over Tensor. Define-by-run: every operation appends a
// node holding the result and a backward closure. Deliberately minimal - the
// primitive set is exactly what the acoustic model and its losses need, with
// no broadcasting beyond that.
#pragma once

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "s2lpc/tensor.hpp"

namespace s2lpc::nn {

struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Value leaf(Tensor t, bool requires_grad = false) {
    require(t.finite(), "leaf: tensor must be finite");
    return emit(std::move(t), requires_grad, {}, nullptr, "leaf");
  }
  Value constant(Tensor t) { return leaf(std::move(t), false); }
  Value scalar(double x) { return constant(Tensor::scalar(x)); }

  const Tensor& value(Value a) const { return node(a).value; }
  const Tensor& grad(Value a) const {
    const Node& n = node(a);
    require(!n.grad.v.empty(), "grad: backward has not reached this node");
    return n.grad;
  }
  bool requires_grad(Value a) const { return node(a).requires_grad; }
  size_t node_count() const { return nodes_.size(); }

  // ---- elementwise and shape ops ----

  Value add(Value a, Value b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.same_shape(y)) {
      Tensor out = x;
      for (int i = 0; i < out.size(); ++i) out.at(i) += y.at(i);
      return emit(std::move(out), any_grad({a, b}), {a, b},
                  [](Tape& tp, const BackCtx& c) {
                    for (int i = 0; i < c.out_grad->size(); ++i) {
                      const double g = c.out_grad->at(i);
                      if (g == 0.0) continue;
                      if (tp.wants(c.parents[0])) tp.gref(c.parents[0]).at(i) += g;
                      if (tp.wants(c.parents[1])) tp.gref(c.parents[1]).at(i) += g;
                    }
                  },
                  "add");
    }
    // matrix + row-vector bias
    require(x.rank() == 2 && y.rank() == 1 && x.cols() == y.shape[0],
            "add: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c) out.at(r, c) += y.at(c);
    return emit(std::move(out), any_grad({a, b}), {a, b},
                [](Tape& tp, const BackCtx& c) {
                  const Tensor& g = *c.out_grad;
                  if (tp.wants(c.parents[0])) {
                    Tensor& gx = tp.gref(c.parents[0]);
                    for (int i = 0; i < g.size(); ++i) gx.at(i) += g.at(i);
                  }
                  if (tp.wants(c.parents[1])) {
                    Tensor& gy = tp.gref(c.parents[1]);
                    const int cols = g.shape[1];
                    for (int r = 0; r < g.shape[0]; ++r)
                      for (int cc = 0; cc < cols; ++cc)
                        gy.at(cc) += g.at(r, cc);
                  }
                },
                "add_bias");
  }

  Value scale(Value a, double k) {
    Tensor out = value(a);
    for (double& x : out.v) x *= k;
    return emit(std::move(out), any_grad({a}), {a},
                [k](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int i = 0; i < gx.size(); ++i)
                    gx.at(i) += k * c.out_grad->at(i);
                },
                "scale");
  }

  Value sub(Value a, Value b) { return add(a, scale(b, -1.0)); }

  Value mul(Value a, Value b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (y.size() == 1 && x.size() > 1) {
      Tensor out = x;
      const double s = y.at(0);
      for (double& v : out.v) v *= s;
      return emit(std::move(out), any_grad({a, b}), {a, b},
                  [](Tape& tp, const BackCtx& c) {
                    const Tensor& x0 = tp.node(c.parents[0]).value;
                    const double s0 = tp.node(c.parents[1]).value.at(0);
                    for (int i = 0; i < c.out_grad->size(); ++i) {
                      const double g = c.out_grad->at(i);
                      if (g == 0.0) continue;
                      if (tp.wants(c.parents[0]))
                        tp.gref(c.parents[0]).at(i) += g * s0;
                      if (tp.wants(c.parents[1]))
                        tp.gref(c.parents[1]).at(0) += g * x0.at(i);
                    }
                  },
                  "mul_scalar");
    }
    require(x.same_shape(y),
            "mul: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = x;
    for (int i = 0; i < out.size(); ++i) out.at(i) *= y.at(i);
    return emit(std::move(out), any_grad({a, b}), {a, b},
                [](Tape& tp, const BackCtx& c) {
                  const Tensor& x0 = tp.node(c.parents[0]).value;
                  const Tensor& y0 = tp.node(c.parents[1]).value;
                  for (int i = 0; i < c.out_grad->size(); ++i) {
                    const double g = c.out_grad->at(i);
                    if (g == 0.0) continue;
                    if (tp.wants(c.parents[0]))
                      tp.gref(c.parents[0]).at(i) += g * y0.at(i);
                    if (tp.wants(c.parents[1]))
                      tp.gref(c.parents[1]).at(i) += g * x0.at(i);
                  }
                },
                "mul");
  }

  Value concat(const std::vector<Value>& parts) {
    require(!parts.empty(), "concat: no parts");
    int total = 0;
    for (Value p : parts) {
      require(value(p).rank() == 1, "concat: rank-1 parts only");
      total += value(p).size();
    }
    Tensor out({total});
    int off = 0;
    for (Value p : parts)
      for (int i = 0; i < value(p).size(); ++i) out.at(off++) = value(p).at(i);
    return emit(std::move(out), any_grad(parts), parts,
                [](Tape& tp, const BackCtx& c) {
                  int off0 = 0;
                  for (Value p : c.parents) {
                    const int n = tp.node(p).value.size();
                    if (tp.wants(p)) {
                      Tensor& gp = tp.gref(p);
                      for (int i = 0; i < n; ++i)
                        gp.at(i) += c.out_grad->at(off0 + i);
                    }
                    off0 += n;
                  }
                },
                "concat");
  }

  Value stack_rows(const std::vector<Value>& rows) {
    require(!rows.empty(), "stack_rows: no rows");
    const int cols = value(rows[0]).size();
    for (Value r : rows)
      require(value(r).rank() == 1 && value(r).size() == cols,
              "stack_rows: rows must be equal-length vectors");
    Tensor out({static_cast<int>(rows.size()), cols});
    for (size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < cols; ++c)
        out.at(static_cast<int>(r), c) = value(rows[r]).at(c);
    return emit(std::move(out), any_grad(rows), rows,
                [](Tape& tp, const BackCtx& c) {
                  const int cols0 = c.out_grad->shape[1];
                  for (size_t r = 0; r < c.parents.size(); ++r) {
                    if (!tp.wants(c.parents[r])) continue;
                    Tensor& gp = tp.gref(c.parents[r]);
                    for (int cc = 0; cc < cols0; ++cc)
                      gp.at(cc) += c.out_grad->at(static_cast<int>(r), cc);
                  }
                },
                "stack_rows");
  }

  // Row-major reinterpretation; gradient passes through unchanged.
  Value reshape(Value a, std::vector<int> shape) {
    const Tensor& x = value(a);
    require(Tensor::count(shape) == x.size(),
            "reshape: element count mismatch for " + x.shape_str());
    Tensor out(std::move(shape), x.v);
    return emit(std::move(out), any_grad({a}), {a},
                [](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int i = 0; i < gx.size(); ++i)
                    gx.at(i) += c.out_grad->at(i);
                },
                "reshape");
  }

  Value slice(Value a, int start, int len) {
    const Tensor& x = value(a);
    require(x.rank() == 1, "slice: rank-1 input required");
    require(start >= 0 && len > 0 && start + len <= x.size(),
            "slice: range out of bounds");
    Tensor out({len});
    for (int i = 0; i < len; ++i) out.at(i) = x.at(start + i);
    return emit(std::move(out), any_grad({a}), {a},
                [start](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int i = 0; i < c.out_grad->size(); ++i)
                    gx.at(start + i) += c.out_grad->at(i);
                },
                "slice");
  }

  Value slice_rows(Value a, int start, int len) {
    const Tensor& x = value(a);
    require(x.rank() == 2, "slice_rows: rank-2 input required");
    require(start >= 0 && len > 0 && start + len <= x.rows(),
            "slice_rows: range out of bounds");
    Tensor out({len, x.cols()});
    for (int r = 0; r < len; ++r)
      for (int c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(start + r, c);
    return emit(std::move(out), any_grad({a}), {a},
                [start](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  const int cols0 = c.out_grad->shape[1];
                  for (int r = 0; r < c.out_grad->shape[0]; ++r)
                    for (int cc = 0; cc < cols0; ++cc)
                      gx.at(start + r, cc) += c.out_grad->at(r, cc);
                },
                "slice_rows");
  }

  Value slice_cols(Value a, int start, int len) {
    const Tensor& x = value(a);
    require(x.rank() == 2, "slice_cols: rank-2 input required");
    require(start >= 0 && len > 0 && start + len <= x.cols(),
            "slice_cols: range out of bounds");
    Tensor out({x.rows(), len});
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < len; ++c) out.at(r, c) = x.at(r, start + c);
    return emit(std::move(out), any_grad({a}), {a},
                [start](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int r = 0; r < c.out_grad->shape[0]; ++r)
                    for (int cc = 0; cc < c.out_grad->shape[1]; ++cc)
                      gx.at(r, start + cc) += c.out_grad->at(r, cc);
                },
                "slice_cols");
  }

  Value concat_cols(const std::vector<Value>& parts) {
    require(!parts.empty(), "concat_cols: no parts");
    const int rows = value(parts[0]).rows();
    int total = 0;
    for (Value p : parts) {
      require(value(p).rank() == 2 && value(p).rows() == rows,
              "concat_cols: row count mismatch");
      total += value(p).cols();
    }
    Tensor out({rows, total});
    int off = 0;
    for (Value p : parts) {
      const Tensor& x = value(p);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < x.cols(); ++c) out.at(r, off + c) = x.at(r, c);
      off += x.cols();
    }
    return emit(std::move(out), any_grad(parts), parts,
                [](Tape& tp, const BackCtx& c) {
                  int off0 = 0;
                  for (Value p : c.parents) {
                    const Tensor& x = tp.node(p).value;
                    if (tp.wants(p)) {
                      Tensor& gp = tp.gref(p);
                      for (int r = 0; r < x.shape[0]; ++r)
                        for (int cc = 0; cc < x.shape[1]; ++cc)
                          gp.at(r, cc) += c.out_grad->at(r, off0 + cc);
                    }
                    off0 += x.shape[1];
                  }
                },
                "concat_cols");
  }

  // ---- linear algebra ----

  Value matmul(Value a, Value b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.rank() == 2 && y.rank() == 2) {
      require(x.cols() == y.rows(), "matmul: inner dimensions differ, " +
                                        x.shape_str() + " x " + y.shape_str());
      Tensor out({x.rows(), y.cols()});
      for (int i = 0; i < x.rows(); ++i)
        for (int k = 0; k < x.cols(); ++k) {
          const double xv = x.at(i, k);
          if (xv == 0.0) continue;
          for (int j = 0; j < y.cols(); ++j) out.at(i, j) += xv * y.at(k, j);
        }
      return emit(std::move(out), any_grad({a, b}), {a, b},
                  [](Tape& tp, const BackCtx& c) {
                    const Tensor& x0 = tp.node(c.parents[0]).value;
                    const Tensor& y0 = tp.node(c.parents[1]).value;
                    const Tensor& g = *c.out_grad;
                    if (tp.wants(c.parents[0])) {
                      Tensor& gx = tp.gref(c.parents[0]);
                      for (int i = 0; i < x0.shape[0]; ++i)
                        for (int j = 0; j < g.shape[1]; ++j) {
                          const double gv = g.at(i, j);
                          if (gv == 0.0) continue;
                          for (int k = 0; k < x0.shape[1]; ++k)
                            gx.at(i, k) += gv * y0.at(k, j);
                        }
                    }
                    if (tp.wants(c.parents[1])) {
                      Tensor& gy = tp.gref(c.parents[1]);
                      for (int i = 0; i < x0.shape[0]; ++i)
                        for (int k = 0; k < x0.shape[1]; ++k) {
                          const double xv = x0.at(i, k);
                          if (xv == 0.0) continue;
                          for (int j = 0; j < g.shape[1]; ++j)
                            gy.at(k, j) += xv * g.at(i, j);
                        }
                    }
                  },
                  "matmul");
    }
    if (x.rank() == 1 && y.rank() == 2) {
      require(x.size() == y.rows(), "matmul: inner dimensions differ, " +
                                        x.shape_str() + " x " + y.shape_str());
      Tensor out({y.cols()});
      for (int k = 0; k < x.size(); ++k) {
        const double xv = x.at(k);
        if (xv == 0.0) continue;
        for (int j = 0; j < y.cols(); ++j) out.at(j) += xv * y.at(k, j);
      }
      return emit(std::move(out), any_grad({a, b}), {a, b},
                  [](Tape& tp, const BackCtx& c) {
                    const Tensor& x0 = tp.node(c.parents[0]).value;
                    const Tensor& y0 = tp.node(c.parents[1]).value;
                    const Tensor& g = *c.out_grad;
                    if (tp.wants(c.parents[0])) {
                      Tensor& gx = tp.gref(c.parents[0]);
                      for (int k = 0; k < x0.size(); ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < g.size(); ++j)
                          acc += g.at(j) * y0.at(k, j);
                        gx.at(k) += acc;
                      }
                    }
                    if (tp.wants(c.parents[1])) {
                      Tensor& gy = tp.gref(c.parents[1]);
                      for (int k = 0; k < x0.size(); ++k) {
                        const double xv = x0.at(k);
                        if (xv == 0.0) continue;
                        for (int j = 0; j < g.size(); ++j)
                          gy.at(k, j) += xv * g.at(j);
                      }
                    }
                  },
                  "matmul_vm");
    }
    require(x.rank() == 2 && y.rank() == 1 && x.cols() == y.size(),
            "matmul: unsupported shapes " + x.shape_str() + " x " +
                y.shape_str());
    Tensor out({x.rows()});
    for (int i = 0; i < x.rows(); ++i) {
      double acc = 0.0;
      for (int k = 0; k < x.cols(); ++k) acc += x.at(i, k) * y.at(k);
      out.at(i) = acc;
    }
    return emit(std::move(out), any_grad({a, b}), {a, b},
                [](Tape& tp, const BackCtx& c) {
                  const Tensor& x0 = tp.node(c.parents[0]).value;
                  const Tensor& y0 = tp.node(c.parents[1]).value;
                  const Tensor& g = *c.out_grad;
                  if (tp.wants(c.parents[0])) {
                    Tensor& gx = tp.gref(c.parents[0]);
                    for (int i = 0; i < g.size(); ++i) {
                      const double gv = g.at(i);
                      if (gv == 0.0) continue;
                      for (int k = 0; k < y0.size(); ++k)
                        gx.at(i, k) += gv * y0.at(k);
                    }
                  }
                  if (tp.wants(c.parents[1])) {
                    Tensor& gy = tp.gref(c.parents[1]);
                    for (int i = 0; i < g.size(); ++i) {
                      const double gv = g.at(i);
                      if (gv == 0.0) continue;
                      for (int k = 0; k < y0.size(); ++k)
                        gy.at(k) += gv * x0.at(i, k);
                    }
                  }
                },
                "matmul_mv");
  }

  // ---- nonlinearities ----

  Value sigmoid(Value a) {
    Tensor out = value(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return unary_from_output(a, std::move(out),
                             [](double y, double) { return y * (1.0 - y); },
                             "sigmoid");
  }

  Value tanh_(Value a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::tanh(x);
    return unary_from_output(a, std::move(out),
                             [](double y, double) { return 1.0 - y * y; },
                             "tanh");
  }

  Value relu(Value a) {
    Tensor out = value(a);
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return unary_from_output(
        a, std::move(out), [](double, double x) { return x > 0.0 ? 1.0 : 0.0; },
        "relu");
  }

  // Natural log; log(0) yields -inf which the confined-log clamp absorbs.
  // Zero upstream gradients are skipped so the clamped branch cannot emit NaN.
  Value log_(Value a) {
    for (double x : value(a).v)
      require(x >= 0.0, "log: negative input");
    Tensor out = value(a);
    for (double& x : out.v) x = std::log(x);
    return unary_from_output(a, std::move(out),
                             [](double, double x) { return 1.0 / x; }, "log");
  }

  Value max_const(Value a, double floor) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::max(x, floor);
    return unary_from_output(
        a, std::move(out),
        [floor](double, double x) { return x > floor ? 1.0 : 0.0; },
        "max_const");
  }

  Value softmax(Value a) {
    const Tensor& x = value(a);
    require(x.rank() == 1, "softmax: rank-1 input required");
    Tensor out = x;
    double mx = out.at(0);
    for (double v : out.v) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : out.v) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : out.v) v /= sum;
    return emit(std::move(out), any_grad({a}), {a},
                [](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  const Tensor& y = tp.node(c.self).value;
                  const Tensor& g = *c.out_grad;
                  double dot = 0.0;
                  for (int i = 0; i < y.size(); ++i) dot += g.at(i) * y.at(i);
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int i = 0; i < y.size(); ++i)
                    gx.at(i) += y.at(i) * (g.at(i) - dot);
                },
                "softmax");
  }

  // Train-only inverted dropout. The mask is a pure function of the seed, so
  // re-running the op (finite differences) sees the same mask.
  Value dropout(Value a, double p, uint64_t seed) {
    require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor mask = value(a);
    for (double& m : mask.v) m = u(rng) < p ? 0.0 : 1.0 / (1.0 - p);
    Value m = constant(std::move(mask));
    return mul(a, m);
  }

  // ---- structured ops ----

  // 1-D convolution over time: x is T x Cin, w is (K*Cin) x Cout, bias Cout.
  // Same zero padding, stride 1, odd kernel.
  Value conv1d(Value xv, Value wv, Value bv, int kernel) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    require(kernel >= 1 && kernel % 2 == 1, "conv1d: kernel must be odd");
    require(x.rank() == 2 && w.rank() == 2 && b.rank() == 1,
            "conv1d: expected (T,Cin), (K*Cin,Cout), (Cout)");
    const int T = x.rows(), cin = x.cols(), cout = w.cols();
    require(w.rows() == kernel * cin,
            "conv1d: weight rows must equal kernel * input channels");
    require(b.size() == cout, "conv1d: bias size must equal output channels");
    const int pad = kernel / 2;

    Tensor out({T, cout});
    for (int t = 0; t < T; ++t) {
      for (int o = 0; o < cout; ++o) out.at(t, o) = b.at(o);
      for (int k = 0; k < kernel; ++k) {
        const int src = t + k - pad;
        if (src < 0 || src >= T) continue;
        for (int ci = 0; ci < cin; ++ci) {
          const double xv0 = x.at(src, ci);
          if (xv0 == 0.0) continue;
          const int wrow = k * cin + ci;
          for (int o = 0; o < cout; ++o)
            out.at(t, o) += xv0 * w.at(wrow, o);
        }
      }
    }
    return emit(std::move(out), any_grad({xv, wv, bv}), {xv, wv, bv},
                [kernel, pad](Tape& tp, const BackCtx& c) {
                  const Tensor& x0 = tp.node(c.parents[0]).value;
                  const Tensor& w0 = tp.node(c.parents[1]).value;
                  const Tensor& g = *c.out_grad;
                  const int T = x0.shape[0], cin = x0.shape[1],
                            cout = w0.shape[1];
                  const bool wx = tp.wants(c.parents[0]);
                  const bool ww = tp.wants(c.parents[1]);
                  const bool wb = tp.wants(c.parents[2]);
                  for (int t = 0; t < T; ++t) {
                    for (int o = 0; o < cout; ++o) {
                      const double gv = g.at(t, o);
                      if (gv == 0.0) continue;
                      if (wb) tp.gref(c.parents[2]).at(o) += gv;
                      for (int k = 0; k < kernel; ++k) {
                        const int src = t + k - pad;
                        if (src < 0 || src >= T) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                          const int wrow = k * cin + ci;
                          if (wx)
                            tp.gref(c.parents[0]).at(src, ci) +=
                                gv * w0.at(wrow, o);
                          if (ww)
                            tp.gref(c.parents[1]).at(wrow, o) +=
                                gv * x0.at(src, ci);
                        }
                      }
                    }
                  }
                },
                "conv1d");
  }

  // Embedding lookup: rows of table (V x D) selected by ids.
  Value embed_rows(Value table, const std::vector<int>& ids) {
    const Tensor& tab = value(table);
    require(tab.rank() == 2, "embed_rows: table must be rank 2");
    for (int id : ids)
      require(id >= 0 && id < tab.rows(), "embed_rows: id out of range");
    Tensor out({static_cast<int>(ids.size()), tab.cols()});
    for (size_t r = 0; r < ids.size(); ++r)
      for (int c = 0; c < tab.cols(); ++c)
        out.at(static_cast<int>(r), c) = tab.at(ids[r], c);
    auto ids_copy = ids;
    return emit(std::move(out), any_grad({table}), {table},
                [ids_copy](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  Tensor& gt = tp.gref(c.parents[0]);
                  const int cols = gt.shape[1];
                  for (size_t r = 0; r < ids_copy.size(); ++r)
                    for (int cc = 0; cc < cols; ++cc)
                      gt.at(ids_copy[r], cc) +=
                          c.out_grad->at(static_cast<int>(r), cc);
                },
                "embed_rows");
  }

  // ---- reductions and losses ----

  Value sum(Value a) {
    double acc = 0.0;
    for (double x : value(a).v) acc += x;
    return emit(Tensor::scalar(acc), any_grad({a}), {a},
                [](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  const double g = c.out_grad->at(0);
                  if (g == 0.0) return;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (double& v : gx.v) v += g;
                },
                "sum");
  }

  Value mean(Value a) { return scale(sum(a), 1.0 / value(a).size()); }

  // Maximum element; gradient flows to the first argmax.
  Value max_reduce(Value a) {
    const Tensor& x = value(a);
    require(x.size() >= 1, "max_reduce: empty input");
    int arg = 0;
    for (int i = 1; i < x.size(); ++i)
      if (x.at(i) > x.at(arg)) arg = i;
    return emit(Tensor::scalar(x.at(arg)), any_grad({a}), {a},
                [arg](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  tp.gref(c.parents[0]).at(arg) += c.out_grad->at(0);
                },
                "max_reduce");
  }

  Value mse(Value a, Value b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require(x.same_shape(y),
            "mse: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) {
      const double d = x.at(i) - y.at(i);
      acc += d * d;
    }
    return emit(Tensor::scalar(acc / x.size()), any_grad({a, b}), {a, b},
                [](Tape& tp, const BackCtx& c) {
                  const double g = c.out_grad->at(0);
                  if (g == 0.0) return;
                  const Tensor& x0 = tp.node(c.parents[0]).value;
                  const Tensor& y0 = tp.node(c.parents[1]).value;
                  const double s = 2.0 * g / x0.size();
                  for (int i = 0; i < x0.size(); ++i) {
                    const double d = s * (x0.at(i) - y0.at(i));
                    if (tp.wants(c.parents[0])) tp.gref(c.parents[0]).at(i) += d;
                    if (tp.wants(c.parents[1])) tp.gref(c.parents[1]).at(i) -= d;
                  }
                },
                "mse");
  }

  // Mean binary cross-entropy on logits (numerically stable form).
  Value bce_with_logits(Value logits, Value targets) {
    const Tensor& z = value(logits);
    const Tensor& y = value(targets);
    require(z.same_shape(y), "bce_with_logits: shape mismatch");
    for (double t : y.v)
      require(t >= 0.0 && t <= 1.0, "bce_with_logits: targets must be in [0,1]");
    double acc = 0.0;
    for (int i = 0; i < z.size(); ++i) {
      const double zi = z.at(i);
      acc += std::max(zi, 0.0) - zi * y.at(i) + std::log1p(std::exp(-std::abs(zi)));
    }
    return emit(Tensor::scalar(acc / z.size()), any_grad({logits, targets}),
                {logits, targets},
                [](Tape& tp, const BackCtx& c) {
                  const double g = c.out_grad->at(0);
                  if (g == 0.0) return;
                  const Tensor& z0 = tp.node(c.parents[0]).value;
                  const Tensor& y0 = tp.node(c.parents[1]).value;
                  const double s = g / z0.size();
                  for (int i = 0; i < z0.size(); ++i) {
                    const double p = 1.0 / (1.0 + std::exp(-z0.at(i)));
                    if (tp.wants(c.parents[0]))
                      tp.gref(c.parents[0]).at(i) += s * (p - y0.at(i));
                    if (tp.wants(c.parents[1])) {
                      // d/dy of the stable form is -z
                      tp.gref(c.parents[1]).at(i) += -s * z0.at(i);
                    }
                  }
                },
                "bce_with_logits");
  }

  // ---- backward ----

  void backward(Value root) {
    Node& r = nodes_[static_cast<size_t>(root.id)];
    require(r.value.size() == 1, "backward: root must be scalar");
    require(r.requires_grad, "backward: root does not require grad");
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad = Tensor(n.value.shape);
    r.grad.at(0) = 1.0;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.requires_grad || !n.backward) continue;
      BackCtx ctx{Value{id}, n.parents, &n.grad};
      n.backward(*this, ctx);
    }
  }

 private:
  struct BackCtx {
    Value self;
    std::vector<Value> parents;
    const Tensor* out_grad;
  };
  using BackwardFn = std::function<void(Tape&, const BackCtx&)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Value> parents;
    BackwardFn backward;
    const char* op = "";
  };

  const Node& node(Value a) const {
    require(a.valid() && a.id < static_cast<int>(nodes_.size()),
            "tape: invalid value handle");
    return nodes_[static_cast<size_t>(a.id)];
  }
  Node& node(Value a) {
    require(a.valid() && a.id < static_cast<int>(nodes_.size()),
            "tape: invalid value handle");
    return nodes_[static_cast<size_t>(a.id)];
  }

  bool wants(Value a) { return node(a).requires_grad; }
  Tensor& gref(Value a) { return node(a).grad; }

  bool any_grad(const std::vector<Value>& parents) {
    for (Value p : parents)
      if (node(p).requires_grad) return true;
    return false;
  }

  Value emit(Tensor out, bool requires_grad, std::vector<Value> parents,
             BackwardFn backward, const char* op) {
    Node n;
    n.value = std::move(out);
    n.requires_grad = requires_grad;
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    n.op = op;
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
  }

  // Unary op whose local derivative is a function of (output, input).
  template <typename F>
  Value unary_from_output(Value a, Tensor out, F dfn, const char* op) {
    return emit(std::move(out), any_grad({a}), {a},
                [dfn](Tape& tp, const BackCtx& c) {
                  if (!tp.wants(c.parents[0])) return;
                  const Tensor& y = tp.node(c.self).value;
                  const Tensor& x = tp.node(c.parents[0]).value;
                  Tensor& gx = tp.gref(c.parents[0]);
                  for (int i = 0; i < y.size(); ++i) {
                    const double g = c.out_grad->at(i);
                    if (g == 0.0) continue;
                    gx.at(i) += g * dfn(y.at(i), x.at(i));
                  }
                },
                op);
  }

  std::vector<Node> nodes_;
};

// One LSTM cell step built from the elementary primitives. Gate order in the
// fused preactivation is [input, forget, cell, output].
struct LstmCell {
  Value wx;  // Din x 4H
  Value wh;  // H x 4H
  Value b;   // 4H
  int hidden = 0;
};

struct LstmState {
  Value h;
  Value c;
};

inline LstmState lstm_step(Tape& tp, const LstmCell& cell, Value x,
                           const LstmState& s) {
  const int H = cell.hidden;
  Value pre = tp.add(tp.add(tp.matmul(x, cell.wx), tp.matmul(s.h, cell.wh)),
                     cell.b);
  Value i = tp.sigmoid(tp.slice(pre, 0, H));
  Value f = tp.sigmoid(tp.slice(pre, H, H));
  Value g = tp.tanh_(tp.slice(pre, 2 * H, H));
  Value o = tp.sigmoid(tp.slice(pre, 3 * H, H));
  Value c = tp.add(tp.mul(f, s.c), tp.mul(i, g));
  Value h = tp.mul(o, tp.tanh_(c));
  return {h, c};
}

}  // namespace s2lpc::nn
