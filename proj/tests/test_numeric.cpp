#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aste/adam.hpp"
#include "aste/autograd.hpp"
#include "aste/error.hpp"
#include "aste/gradcheck.hpp"
#include "aste/rng.hpp"

using namespace aste;
using nn::Var;

namespace {

Array random_array(Rng& rng, std::vector<int> shape, double stddev = 1.0) {
  Array a = Array::zeros(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal(0.0, stddev);
  return a;
}

}  // namespace

TEST_CASE("masked softmax basics") {
  SUBCASE("symmetric scores split evenly") {
    Var s = nn::constant(Array::row({0.0, 0.0}));
    BoolMatrix mask(1, 2, true);
    Var p = nn::masked_softmax(s, mask);
    CHECK(p.value().at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.value().at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("masked position is exactly zero") {
    Var s = nn::constant(Array::row({5.0, 3.0, 1.0}));
    BoolMatrix mask(1, 3, true);
    mask.set(0, 1, false);
    Var p = nn::masked_softmax(s, mask);
    // e^5/(e^5+e^1) and e^1/(e^5+e^1)
    CHECK(p.value().at(0, 0) == doctest::Approx(0.982014).epsilon(1e-6));
    CHECK(p.value().at(0, 1) == 0.0);
    CHECK(p.value().at(0, 2) == doctest::Approx(0.017986).epsilon(1e-4));
  }

  SUBCASE("single visible entry takes all the mass") {
    Var s = nn::constant(Array::row({9.0, -9.0}));
    BoolMatrix mask(1, 2, true);
    mask.set(0, 1, false);
    Var p = nn::masked_softmax(s, mask);
    CHECK(p.value().at(0, 0) == 1.0);
    CHECK(p.value().at(0, 1) == 0.0);
  }

  SUBCASE("all-false row is rejected") {
    Var s = nn::constant(Array::row({1.0, 2.0}));
    BoolMatrix mask(1, 2, false);
    CHECK_THROWS_AS(nn::masked_softmax(s, mask), Error);
  }

  SUBCASE("rows are probability distributions with exact zeros off-field") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const int rows = 1 + static_cast<int>(rng.below(6));
      const int cols = 1 + static_cast<int>(rng.below(8));
      Var s = nn::constant(random_array(rng, {rows, cols}, 3.0));
      BoolMatrix mask(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) mask.set(r, c, rng.uniform() < 0.5);
        mask.set(r, static_cast<int>(rng.below(static_cast<std::uint64_t>(cols))), true);
      }
      Var p = nn::masked_softmax(s, mask);
      for (int r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < cols; ++c) {
          const double v = p.value().at(r, c);
          CHECK(v >= 0.0);
          if (!mask.at(r, c)) CHECK(v == 0.0);
          sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("cross entropy values") {
  SUBCASE("perfect prediction costs nothing") {
    Var d = nn::constant(Array::vec({1.0, 0.0, 0.0}));
    Var l = nn::cross_entropy(d, Array::vec({1.0, 0.0, 0.0}));
    CHECK(l.value()[0] == doctest::Approx(0.0));
  }
  SUBCASE("uniform four-way costs ln 4") {
    Var d = nn::constant(Array::vec({0.25, 0.25, 0.25, 0.25}));
    for (int g = 0; g < 4; ++g) {
      Array onehot = Array::zeros({4});
      onehot[static_cast<std::size_t>(g)] = 1.0;
      CHECK(nn::cross_entropy(d, onehot).value()[0] == doctest::Approx(1.386294).epsilon(1e-6));
    }
  }
  SUBCASE("-ln 0.1") {
    Var d = nn::constant(Array::vec({0.9, 0.1}));
    CHECK(nn::cross_entropy(d, Array::vec({0.0, 1.0})).value()[0] ==
          doctest::Approx(2.302585).epsilon(1e-6));
  }
  SUBCASE("zero probability clamps at the floor") {
    Var d = nn::constant(Array::vec({1.0, 0.0}));
    CHECK(nn::cross_entropy(d, Array::vec({0.0, 1.0})).value()[0] ==
          doctest::Approx(-std::log(1e-12)));
  }
  SUBCASE("malformed one-hot is rejected") {
    Var d = nn::constant(Array::vec({0.5, 0.5}));
    CHECK_THROWS_AS(nn::cross_entropy(d, Array::vec({1.0, 1.0})), Error);
    CHECK_THROWS_AS(nn::cross_entropy(d, Array::vec({0.0, 0.0})), Error);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradients leave parameters unchanged") {
    nn::ParamStore store;
    nn::Parameter& w = store.add("w", Array::vec({1.0, -2.0, 3.0}));
    nn::Adam adam(store, {0.1});
    adam.step();
    CHECK(w.value[0] == 1.0);
    CHECK(w.value[1] == -2.0);
    CHECK(w.value[2] == 3.0);
  }

  SUBCASE("first step is a bias-corrected unit step") {
    nn::ParamStore store;
    nn::Parameter& w = store.add("w", Array::vec({1.0}));
    w.grad[0] = 1.0;
    nn::Adam adam(store, {0.1});
    adam.step();
    // m-hat = 1, v-hat = 1: the update is lr/(1 + eps).
    CHECK(w.value[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(w.grad[0] == 0.0);
    CHECK(adam.steps_taken() == 1);
  }

  SUBCASE("successive steps decrease a convex quadratic") {
    nn::ParamStore store;
    nn::Parameter& w = store.add("w", Array::vec({3.0}));
    nn::Adam adam(store, {0.1});
    auto loss_value = [&]() { return (w.value[0] - 1.0) * (w.value[0] - 1.0); };
    double prev = loss_value();
    for (int step = 0; step < 2; ++step) {
      Var wv = nn::leaf(w);
      Var diff = nn::add(wv, nn::constant(Array::vec({-1.0})));
      Var sq = nn::matmul_nt(diff, diff);  // 1x1
      nn::backward(Var(sq.node()));
      adam.step();
      const double cur = loss_value();
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("grad check on a scalar square") {
  nn::ParamStore store;
  nn::Parameter& w = store.add("w", Array::vec({3.0}));
  const double worst = nn::grad_check(store, [&]() {
    Var wv = nn::leaf(w);
    return nn::matmul_nt(wv, wv);
  });
  CHECK(worst < 1e-8);

  // Analytic gradient itself: d(w^2)/dw = 6 at w = 3.
  store.zero_grads();
  Var wv = nn::leaf(w);
  nn::backward(nn::matmul_nt(wv, wv));
  CHECK(w.grad[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("grad check covers every op") {
  Rng rng(17);

  SUBCASE("matmul chain with bias, gelu, layer norm") {
    nn::ParamStore store;
    nn::Parameter& w1 = store.add("w1", random_array(rng, {4, 6}, 0.5));
    nn::Parameter& b1 = store.add("b1", random_array(rng, {6}, 0.5));
    nn::Parameter& gain = store.add("gain", random_array(rng, {6}, 0.3));
    nn::Parameter& bias = store.add("bias", random_array(rng, {6}, 0.3));
    nn::Parameter& w2 = store.add("w2", random_array(rng, {6, 3}, 0.5));
    const Array x = random_array(rng, {2, 4});
    const Array onehot = Array::vec({0.0, 1.0, 0.0});

    const double worst = nn::grad_check(store, [&]() {
      Var h = nn::add_bias(nn::matmul(nn::constant(x), nn::leaf(w1)), nn::leaf(b1));
      h = nn::layer_norm(nn::gelu(h), nn::leaf(gain), nn::leaf(bias));
      Var probs = nn::softmax_rows(nn::matmul(h, nn::leaf(w2)));
      Var row = nn::gather_rows(probs, {1});
      return nn::cross_entropy(row, onehot);
    });
    CHECK(worst < 1e-4);
  }

  SUBCASE("masked attention block") {
    nn::ParamStore store;
    nn::Parameter& wq = store.add("wq", random_array(rng, {5, 4}, 0.5));
    nn::Parameter& wk = store.add("wk", random_array(rng, {5, 4}, 0.5));
    nn::Parameter& wv = store.add("wv", random_array(rng, {5, 4}, 0.5));
    const Array x = random_array(rng, {3, 5});
    BoolMatrix mask(3, 3, true);
    mask.set(0, 2, false);
    mask.set(2, 0, false);

    const double worst = nn::grad_check(store, [&]() {
      Var xv = nn::constant(x);
      Var q = nn::matmul(xv, nn::leaf(wq));
      Var k = nn::matmul(xv, nn::leaf(wk));
      Var v = nn::matmul(xv, nn::leaf(wv));
      Var probs = nn::masked_softmax(nn::scale(nn::matmul_nt(q, k), 0.5), mask);
      Var ctx = nn::matmul(probs, v);
      Var pooled = nn::gather_rows(ctx, {0});
      Var dist = nn::softmax_rows(pooled);
      return nn::cross_entropy(dist, Array::vec({0.0, 0.0, 1.0, 0.0}));
    });
    CHECK(worst < 1e-4);
  }

  SUBCASE("slice, concat, scale, add, sums") {
    nn::ParamStore store;
    nn::Parameter& w = store.add("w", random_array(rng, {2, 6}, 0.7));
    const double worst = nn::grad_check(store, [&]() {
      Var wv = nn::leaf(w);
      Var left = nn::slice_cols(wv, 0, 3);
      Var right = nn::slice_cols(wv, 3, 3);
      Var both = nn::concat_cols(nn::add(left, right), nn::scale(left, -0.5));
      Var probs = nn::softmax_rows(both);
      Var a = nn::cross_entropy_rows(probs, {1, 4});
      Var b = nn::cross_entropy(nn::gather_rows(probs, {0}), Array::vec({0, 0, 1, 0, 0, 0}));
      return nn::add_scalars({a, b});
    });
    CHECK(worst < 1e-4);
  }

  SUBCASE("eps outside the allowed window is rejected") {
    nn::ParamStore store;
    nn::Parameter& w = store.add("w", Array::vec({1.0}));
    auto f = [&]() { return nn::matmul_nt(nn::leaf(w), nn::leaf(w)); };
    CHECK_THROWS_AS(nn::grad_check(store, f, 1e-8), Error);
    CHECK_THROWS_AS(nn::grad_check(store, f, 1e-2), Error);
  }
}

TEST_CASE("dropout") {
  Rng rng(23);
  const Array x = random_array(rng, {4, 8});

  SUBCASE("eval mode is the identity") {
    Rng r2(1);
    Var out = nn::dropout(nn::constant(x), 0.5, r2, false);
    CHECK(out.value().data() == out.value().data());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(out.value()[i] == x[i]);
  }

  SUBCASE("same seed reproduces the same mask") {
    Rng r1(99), r2(99);
    Var a = nn::dropout(nn::constant(x), 0.3, r1, true);
    Var b = nn::dropout(nn::constant(x), 0.3, r2, true);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.value()[i] == b.value()[i]);
  }

  SUBCASE("kept entries are scaled by 1/keep") {
    Rng r(7);
    Var out = nn::dropout(nn::constant(x), 0.25, r, true);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = out.value()[i];
      if (v != 0.0) CHECK(v == doctest::Approx(x[i] / 0.75).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward accumulates through shared subexpressions") {
  nn::ParamStore store;
  nn::Parameter& w = store.add("w", Array::vec({2.0}));
  Var wv = nn::leaf(w);
  // f = (w + w) · w = 2w^2, df/dw = 4w = 8
  Var doubled = nn::add(wv, wv);
  nn::backward(nn::matmul_nt(doubled, wv));
  CHECK(w.grad[0] == doctest::Approx(8.0).epsilon(1e-12));
}
