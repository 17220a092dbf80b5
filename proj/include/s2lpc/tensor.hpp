// Dense row-major tensor of doubles, rank 0..2. The training core runs in
// 64-bit throughout so finite-difference checks have headroom.
#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "s2lpc/common.hpp"

namespace s2lpc::nn {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<size_t>(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    require(static_cast<size_t>(count(shape)) == v.size(),
            "tensor: value count does not match shape");
  }

  static int count(const std::vector<int>& s) {
    int n = 1;
    for (int d : s) {
      require(d > 0, "tensor: dimensions must be positive");
      n *= d;
    }
    return n;
  }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double x) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
  }

  int size() const { return static_cast<int>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const {
    require(rank() == 2, "tensor: rows() needs rank 2");
    return shape[0];
  }
  int cols() const {
    require(rank() == 2, "tensor: cols() needs rank 2");
    return shape[1];
  }

  double& at(int i) { return v[static_cast<size_t>(i)]; }
  double at(int i) const { return v[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return v[static_cast<size_t>(r) * shape[1] + c]; }
  double at(int r, int c) const {
    return v[static_cast<size_t>(r) * shape[1] + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

}  // namespace s2lpc::nn
