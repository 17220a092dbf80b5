// Central finite-difference verification of reverse-mode gradients.
//
// The checked op is any callable building a value from leaves on a fresh
// tape; vector outputs are reduced through a fixed random linear functional
// so one scalar check covers every output coordinate.
#pragma once

#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "s2lpc/autodiff.hpp"

namespace s2lpc::nn {

using CheckedOp = std::function<Value(Tape&, const std::vector<Value>&)>;

struct GradCheckReport {
  std::string op_name;
  bool pass = true;
  double max_err = 0.0;
  int worst_input = -1;
  int worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int coords_checked = 0;

  std::string to_string() const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << "  " << op_name << "  max_err="
       << max_err << " over " << coords_checked << " coords";
    if (!pass)
      os << "  worst at input " << worst_input << " coord " << worst_coord
         << " (reverse " << worst_analytic << ", central " << worst_numeric
         << ")";
    return os.str();
  }
};

namespace detail {

inline Tensor projection_weights(const std::vector<int>& shape) {
  std::mt19937_64 rng(0xC0FFEEull ^ (Tensor::count(shape) * 2654435761ull));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor w(shape);
  for (double& x : w.v) x = u(rng);
  return w;
}

}  // namespace detail

// Runs op at `point`, comparing reverse-mode gradients against central
// finite differences (step 1e-5). A coordinate passes when the relative
// error is within tol, with a small absolute floor for near-zero gradients.
inline GradCheckReport grad_check(const std::string& name, const CheckedOp& op,
                                  const std::vector<Tensor>& point,
                                  double tol = 1e-4, double step = 1e-5) {
  GradCheckReport report;
  report.op_name = name;

  auto scalar_loss = [&](Tape& tp, const std::vector<Value>& leaves) {
    Value out = op(tp, leaves);
    if (tp.value(out).size() == 1) return out;
    Value w = tp.constant(detail::projection_weights(tp.value(out).shape));
    return tp.sum(tp.mul(out, w));
  };

  // reverse-mode pass
  Tape tape;
  std::vector<Value> leaves;
  leaves.reserve(point.size());
  for (const Tensor& t : point) leaves.push_back(tape.leaf(t, true));
  Value loss = scalar_loss(tape, leaves);
  tape.backward(loss);

  auto eval_at = [&](const std::vector<Tensor>& p) {
    Tape tp;
    std::vector<Value> ls;
    ls.reserve(p.size());
    for (const Tensor& t : p) ls.push_back(tp.leaf(t, false));
    return tp.value(scalar_loss(tp, ls)).at(0);
  };

  std::vector<Tensor> probe = point;
  for (size_t i = 0; i < point.size(); ++i) {
    const Tensor& analytic = tape.grad(leaves[i]);
    for (int j = 0; j < point[i].size(); ++j) {
      const double keep = probe[i].at(j);
      probe[i].at(j) = keep + step;
      const double up = eval_at(probe);
      probe[i].at(j) = keep - step;
      const double down = eval_at(probe);
      probe[i].at(j) = keep;

      const double numeric = (up - down) / (2.0 * step);
      const double ad = analytic.at(j);
      const double diff = std::abs(ad - numeric);
      const double denom = std::max(std::abs(ad), std::abs(numeric));
      const double err = denom > 1e-7 ? diff / denom : diff;
      ++report.coords_checked;
      if (err > report.max_err) {
        report.max_err = err;
        report.worst_input = static_cast<int>(i);
        report.worst_coord = j;
        report.worst_analytic = ad;
        report.worst_numeric = numeric;
      }
      // absolute floor: both gradients are numerically zero
      if (err > tol && diff > 1e-7) report.pass = false;
    }
  }
  return report;
}

}  // namespace s2lpc::nn
