#include <catch2/catch_amalgamated.hpp>

#include "grad_cases.hpp"
#include "s2lpc/autodiff.hpp"
#include "s2lpc/grad_check.hpp"

using namespace s2lpc;
using namespace s2lpc::nn;
using Catch::Approx;

TEST_CASE("forward basics") {
  Tape tp;

  SECTION("softmax of zeros is uniform") {
    Value v = tp.constant(Tensor({3}));
    const Tensor& y = tp.value(tp.softmax(v));
    for (int i = 0; i < 3; ++i) CHECK(y.at(i) == Approx(1.0 / 3.0));
  }

  SECTION("sigmoid(0) = 0.5") {
    Value v = tp.constant(Tensor::scalar(0.0));
    CHECK(tp.value(tp.sigmoid(v)).at(0) == Approx(0.5));
  }

  SECTION("max(log(0), -50) = -50") {
    Value v = tp.constant(Tensor::scalar(0.0));
    Value clamped = tp.max_const(tp.log_(v), -50.0);
    CHECK(tp.value(clamped).at(0) == -50.0);
  }

  SECTION("clamped log has zero gradient") {
    Value x = tp.leaf(Tensor::scalar(0.0), true);
    Value clamped = tp.max_const(tp.log_(x), -50.0);
    tp.backward(clamped);
    CHECK(tp.grad(x).at(0) == 0.0);
  }

  SECTION("matmul shapes") {
    Value m = tp.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Value v = tp.constant(Tensor({3}, {1, 1, 1}));
    const Tensor& mv = tp.value(tp.matmul(m, v));
    CHECK(mv.shape == std::vector<int>{2});
    CHECK(mv.at(0) == Approx(6.0));
    CHECK(mv.at(1) == Approx(15.0));
  }

  SECTION("shape mismatch names the op") {
    Value a = tp.constant(Tensor({3}));
    Value b = tp.constant(Tensor({4}));
    CHECK_THROWS_WITH(tp.add(a, b),
                      Catch::Matchers::ContainsSubstring("add"));
    CHECK_THROWS_WITH(tp.mse(a, b),
                      Catch::Matchers::ContainsSubstring("mse"));
  }
}

TEST_CASE("forward is deterministic for a fixed seed") {
  auto run = [] {
    Tape tp;
    Value x = tp.constant(Tensor({6}, {0.3, -0.2, 1.1, 0.0, -0.7, 0.4}));
    Value d = tp.dropout(x, 0.5, 42);
    Value y = tp.tanh_(d);
    return tp.value(y).v;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a == b);  // bitwise identical
}

TEST_CASE("every registered case passes grad_check at 10 random points") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    for (const auto& c : gradcases::build_cases(seed)) {
      const GradCheckReport report = grad_check(c.name, c.op, c.point);
      INFO(report.to_string() << " (seed " << seed << ")");
      CHECK(report.pass);
    }
  }
}

TEST_CASE("grad_check reports the worst coordinate on failure") {
  // relu exactly at its kink: the subgradient (0) cannot match the centered
  // difference (0.5), so the checker must flag the coordinate
  CheckedOp kinked = [](Tape& tp, const std::vector<Value>& in) {
    return tp.sum(tp.relu(in[0]));
  };
  const GradCheckReport report =
      grad_check("relu_at_kink", kinked, {Tensor({3}, {1.0, 0.0, -1.0})});
  CHECK_FALSE(report.pass);
  CHECK(report.worst_input == 0);
  CHECK(report.worst_coord == 1);
  CHECK(report.max_err > 0.1);
}
