#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "s2lpc/attention.hpp"
#include "s2lpc/grad_check.hpp"

using namespace s2lpc;
using namespace s2lpc::attn;
using nn::Tape;
using nn::Tensor;
using nn::Value;
using Catch::Approx;

namespace {

Tensor one_hot(int n, int k) {
  Tensor t({n});
  t.at(k) = 1.0;
  return t;
}

Tensor rand_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t({n});
  for (double& x : t.v) x = u(rng);
  return t;
}

}  // namespace

TEST_CASE("confined log") {
  Tape tp;
  CHECK(tp.value(confined_log(tp, tp.scalar(1.0))).at(0) == 0.0);
  CHECK(tp.value(confined_log(tp, tp.scalar(0.0))).at(0) == -50.0);
  CHECK(tp.value(confined_log(tp, tp.scalar(std::exp(-60.0)))).at(0) == -50.0);
  CHECK_THROWS_AS(confined_log(tp, tp.scalar(-0.1)), Error);
}

TEST_CASE("candidate set per the shift rules") {
  Tape tp;

  SECTION("unit mass shifts one step toward higher n") {
    Value b_t = tp.constant(one_hot(3, 0));
    Value b_prev = tp.constant(one_hot(3, 1));
    const auto cands = candidate_set(tp, b_t, b_prev);
    REQUIRE(cands.size() == 3);
    CHECK(tp.value(cands[2]).v == std::vector<double>{0.0, 0.0, 1.0});
  }

  SECTION("mass at the end shifts off and is lost") {
    Value b_t = tp.constant(one_hot(3, 0));
    Value b_prev = tp.constant(one_hot(3, 2));
    const auto cands = candidate_set(tp, b_t, b_prev);
    CHECK(tp.value(cands[2]).v == std::vector<double>{0.0, 0.0, 0.0});
  }

  SECTION("one-hot at n=2 of 5 gives {e2, e2, e3}") {
    Value b = tp.constant(one_hot(5, 2));
    const auto cands = candidate_set(tp, b, b);
    CHECK(tp.value(cands[0]).v == one_hot(5, 2).v);
    CHECK(tp.value(cands[1]).v == one_hot(5, 2).v);
    CHECK(tp.value(cands[2]).v == one_hot(5, 3).v);
  }

  SECTION("length mismatch is rejected") {
    Value a = tp.constant(one_hot(3, 0));
    Value b = tp.constant(one_hot(4, 0));
    CHECK_THROWS_AS(candidate_set(tp, a, b), Error);
  }
}

TEST_CASE("structure fit values") {
  Tape tp;

  SECTION("one-hot scores exactly 1 for any length") {
    for (int n : {1, 3, 10, 50}) {
      Value c = tp.constant(one_hot(n, n / 2));
      CHECK(tp.value(structure_fit(tp, c)).at(0) == 1.0);
    }
  }

  SECTION("uniform over 100 scores 0.0005") {
    Value c = tp.constant(Tensor::full({100}, 0.01));
    CHECK(tp.value(structure_fit(tp, c)).at(0) == Approx(0.0005));
  }

  SECTION("two distant equal peaks score 0.25") {
    Tensor t({9});
    t.at(1) = 0.5;
    t.at(7) = 0.5;
    Value c = tp.constant(t);
    CHECK(tp.value(structure_fit(tp, c)).at(0) == Approx(0.25));
  }

  SECTION("all-zero vector scores 0") {
    Value c = tp.constant(Tensor({6}));
    CHECK(tp.value(structure_fit(tp, c)).at(0) == 0.0);
  }

  SECTION("stays within [0, 1] and hits 1 only at one-hot") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
      Tensor t({12});
      double sum = 0.0;
      for (double& x : t.v) {
        x = u(rng);
        sum += x;
      }
      for (double& x : t.v) x /= sum;  // valid alignment
      const double f = tp.value(structure_fit(tp, tp.constant(t))).at(0);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }

  SECTION("decreases with spread") {
    auto spread_score = [&](double side) {
      Tensor t({11});
      t.at(5) = 1.0 - 2.0 * side;
      t.at(4) = side;
      t.at(6) = side;
      return tp.value(structure_fit(tp, tp.constant(t))).at(0);
    };
    CHECK(spread_score(0.0) == 1.0);
    CHECK(spread_score(0.1) < spread_score(0.0));
    CHECK(spread_score(0.3) < spread_score(0.1));
  }
}

TEST_CASE("soft selection") {
  Tape tp;
  const int n = 6;

  SECTION("zero FC and equal penalties give uniform weights") {
    // identical one-hot candidates: p = (0,0,0); zero weights/bias FC
    std::vector<Value> cands = {tp.constant(one_hot(n, 2)),
                                tp.constant(one_hot(n, 2)),
                                tp.constant(one_hot(n, 2))};
    Value sp = tp.constant(Tensor({2}));
    Value xc = tp.constant(Tensor({2}));
    Value hc = tp.constant(Tensor({2}));
    Value w = tp.constant(Tensor({6, 3}));
    Value b = tp.constant(Tensor({3}));
    const auto sel = soft_select(tp, cands, sp, xc, hc, w, b);
    for (int i = 0; i < 3; ++i)
      CHECK(tp.value(sel.weights).at(i) == Approx(1.0 / 3.0));
    // identical candidates: the blend equals each candidate
    CHECK(tp.value(sel.alignment).v == one_hot(n, 2).v);
  }

  SECTION("an ill-formed candidate is suppressed below 1e-10") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Value> cands = {tp.constant(one_hot(n, 1)),
                                  tp.constant(one_hot(n, 2)),
                                  tp.constant(Tensor({n}))};  // all-zero
      Value sp = tp.constant(rand_vec(rng, 2));
      Value xc = tp.constant(rand_vec(rng, 2));
      Value hc = tp.constant(rand_vec(rng, 2));
      // FC outputs bounded by +-10: bias carries the bound, weights zero
      Value w = tp.constant(Tensor({6, 3}));
      Value b = tp.constant(rand_vec(rng, 3, -10.0, 10.0));
      const auto sel = soft_select(tp, cands, sp, xc, hc, w, b);
      CHECK(tp.value(sel.penalties).at(2) == -50.0);
      CHECK(tp.value(sel.weights).at(2) < 1e-10);
      // weights always sum to 1
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) sum += tp.value(sel.weights).at(i);
      CHECK(sum == Approx(1.0).margin(1e-6));
    }
  }

  SECTION("generalizes to four candidates") {
    Value b_t = tp.constant(one_hot(n, 2));
    Value b_prev = tp.constant(one_hot(n, 2));
    auto cands = candidate_set(tp, b_t, b_prev);
    cands.push_back(shift_forward(tp, cands[2]));  // double shift
    Value sp = tp.constant(Tensor({2}));
    Value xc = tp.constant(Tensor({2}));
    Value hc = tp.constant(Tensor({2}));
    Value w = tp.constant(Tensor({6, 4}));
    Value b = tp.constant(Tensor({4}));
    const auto sel = soft_select(tp, cands, sp, xc, hc, w, b);
    const Tensor& alpha = tp.value(sel.weights);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      CHECK(alpha.at(i) >= 0.0);
      sum += alpha.at(i);
    }
    CHECK(sum == Approx(1.0).margin(1e-6));
    // all four candidates are one-hot, so every penalty is 0
    for (int i = 0; i < 4; ++i) CHECK(tp.value(sel.penalties).at(i) == 0.0);

    const Tensor& a = tp.value(sel.alignment);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(a.at(i) >= 0.0);
      mass += a.at(i);
    }
    CHECK(mass <= 1.0 + 1e-6);
  }

  SECTION("FC dimension mismatch is rejected") {
    std::vector<Value> cands = {tp.constant(one_hot(n, 1)),
                                tp.constant(one_hot(n, 2)),
                                tp.constant(one_hot(n, 3))};
    Value sp = tp.constant(Tensor({2}));
    Value xc = tp.constant(Tensor({2}));
    Value hc = tp.constant(Tensor({2}));
    Value w = tp.constant(Tensor({6, 4}));  // K = 3 candidates, FC out 4
    Value b = tp.constant(Tensor({4}));
    CHECK_THROWS_AS(soft_select(tp, cands, sp, xc, hc, w, b), Error);
  }
}

TEST_CASE("context vector") {
  Tape tp;
  std::mt19937_64 rng(3);
  Tensor enc({4, 3});
  for (double& x : enc.v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  Value m = tp.constant(enc);

  SECTION("one-hot alignment picks the matching encoding") {
    Value a = tp.constant(one_hot(4, 2));
    const Tensor& x = tp.value(context(tp, a, m));
    for (int c = 0; c < 3; ++c) CHECK(x.at(c) == Approx(enc.at(2, c)));
  }

  SECTION("half-half alignment averages two encodings") {
    Tensor t({4});
    t.at(0) = 0.5;
    t.at(1) = 0.5;
    const Tensor& x = tp.value(context(tp, tp.constant(t), m));
    for (int c = 0; c < 3; ++c)
      CHECK(x.at(c) == Approx(0.5 * (enc.at(0, c) + enc.at(1, c))));
  }

  SECTION("uniform alignment over identical encodings returns that encoding") {
    Tensor same({4, 3});
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 3; ++c) same.at(r, c) = 0.3 * (c + 1);
    Value a = tp.constant(Tensor::full({4}, 0.25));
    const Tensor& x = tp.value(context(tp, a, tp.constant(same)));
    for (int c = 0; c < 3; ++c) CHECK(x.at(c) == Approx(0.3 * (c + 1)));
  }

  SECTION("length mismatch is rejected") {
    Value a = tp.constant(one_hot(3, 0));
    CHECK_THROWS_AS(context(tp, a, m), Error);
  }
}

TEST_CASE("initial attention produces a normalized distribution") {
  std::mt19937_64 rng(21);
  const int n = 7, dm = 4, dq = 3, A = 5, F = 2, K = 5;

  auto build = [&](Tape& tp, uint64_t seed) {
    std::mt19937_64 r2(seed);
    auto rv = [&](std::vector<int> shape) {
      Tensor t(shape);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      for (double& x : t.v) x = u(r2);
      return tp.constant(t);
    };
    InitialAttentionParams p;
    p.query_w = rv({dq, A});
    p.memory_w = rv({dm, A});
    p.loc_conv_w = rv({K, F});
    p.loc_conv_b = rv({F});
    p.loc_w = rv({F, A});
    p.energy_v = rv({A});
    p.energy_b = rv({A});
    p.loc_kernel = K;
    Value memory = rv({n, dm});
    Value proc = tp.matmul(memory, p.memory_w);
    Value query = rv({dq});
    Value cum = rv({n});
    return tp.value(initial_attention(tp, p, query, memory, proc, cum)).v;
  };

  SECTION("nonnegative, sums to one") {
    Tape tp;
    const auto b = build(tp, 99);
    double sum = 0.0;
    for (double x : b) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == Approx(1.0).margin(1e-6));
  }

  SECTION("singleton sequence attends fully to its only element") {
    Tape tp;
    InitialAttentionParams p;
    p.query_w = tp.constant(Tensor({dq, A}));
    p.memory_w = tp.constant(Tensor({dm, A}));
    p.loc_conv_w = tp.constant(Tensor({K, F}));
    p.loc_conv_b = tp.constant(Tensor({F}));
    p.loc_w = tp.constant(Tensor({F, A}));
    p.energy_v = tp.constant(Tensor({A}));
    p.energy_b = tp.constant(Tensor({A}));
    p.loc_kernel = K;
    Value memory = tp.constant(Tensor({1, dm}));
    Value proc = tp.matmul(memory, p.memory_w);
    Value b =
        initial_attention(tp, p, tp.constant(Tensor({dq})), memory, proc,
                          tp.constant(Tensor({1})));
    CHECK(tp.value(b).v == std::vector<double>{1.0});
  }

  SECTION("bitwise identical across runs") {
    Tape tp1, tp2;
    CHECK(build(tp1, 7) == build(tp2, 7));
  }
}

TEST_CASE("augmented attention composite passes grad_check") {
  // whole pipeline: initial alignment + shift candidates -> soft selection
  // -> blended alignment, away from clamp and argmax kinks
  std::mt19937_64 rng(13);
  const int n = 8;
  auto alignment = [&](int peak) {
    Tensor t({n});
    for (double& x : t.v)
      x = std::uniform_real_distribution<double>(0.01, 0.05)(rng);
    t.at(peak) += 0.7;
    double sum = 0.0;
    for (double x : t.v) sum += x;
    for (double& x : t.v) x /= sum;
    return t;
  };

  nn::CheckedOp op = [](Tape& tp, const std::vector<Value>& in) {
    const auto cands = candidate_set(tp, in[0], in[1]);
    const auto sel =
        soft_select(tp, cands, in[2], in[3], in[4], in[5], in[6]);
    return sel.alignment;
  };
  Tensor fc_w({7, 3});
  {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (double& x : fc_w.v) x = u(rng);
  }
  std::vector<Tensor> point = {alignment(2),     alignment(3),
                               rand_vec(rng, 2), rand_vec(rng, 3),
                               rand_vec(rng, 2), fc_w,
                               rand_vec(rng, 3)};

  const auto report = nn::grad_check("augmented_attention", op, point);
  INFO(report.to_string());
  CHECK(report.pass);
}
