#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "tclf/error.hpp"
#include "tclf/layers.hpp"

using namespace tclf;
using tclf::testing::random_tensor;

namespace {

// Direct nested-loop cross-correlation, [C,H,W] input.
Tensor direct_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t o = w.dim(0), k = w.dim(2);
  Tensor y({o, h - k + 1, wd - k + 1});
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t i = 0; i + k <= h; ++i)
      for (std::size_t j = 0; j + k <= wd; ++j) {
        double s = b[oc];
        for (std::size_t ic = 0; ic < c; ++ic)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj)
              s += x[(ic * h + i + ki) * wd + j + kj] * w[((oc * c + ic) * k + ki) * k + kj];
        y[(oc * (h - k + 1) + i) * (wd - k + 1) + j] = s;
      }
  return y;
}

Tensor direct_pool(const Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, h / 2, w / 2});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h / 2; ++i)
      for (std::size_t j = 0; j < w / 2; ++j) {
        double m = -INFINITY;
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj)
            m = std::max(m, x[(ch * h + 2 * i + di) * w + 2 * j + dj]);
        y[(ch * (h / 2) + i) * (w / 2) + j] = m;
      }
  return y;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("conv2d") {
  TEST_CASE("identity 1x1 kernel") {
    Conv2dLayer conv("c", 1, 1, 1);
    conv.weight.value[0] = 1.0;
    Rng rng(1);
    const Tensor x = random_tensor({1, 3, 3}, rng);
    Tape tape;
    CHECK(conv.forward(tape, tape.leaf(x)).value() == x);
  }

  TEST_CASE("all-ones kernel sums windows") {
    Conv2dLayer conv("c", 1, 1, 3);
    conv.weight.value.fill(1.0);
    Tape tape;
    const Tensor y = conv.forward(tape, tape.leaf(Tensor({1, 4, 4}, 1.0))).value();
    CHECK(y == Tensor({1, 2, 2}, 9.0));
  }

  TEST_CASE("matches brute-force convolution") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
      Conv2dLayer conv("c", 2, 3, 3);
      conv.init(rng);
      conv.bias.value = random_tensor({3}, rng);
      const Tensor x = random_tensor({2, 5, 5}, rng);
      Tape tape;
      const Tensor got = conv.forward(tape, tape.leaf(x)).value();
      const Tensor want = direct_conv(x, conv.weight.value, conv.bias.value);
      REQUIRE(got.shape() == want.shape());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
    }
  }

  TEST_CASE("shape errors") {
    Conv2dLayer conv("c", 2, 3, 3);
    Tape tape;
    CHECK_THROWS_AS(conv.forward(tape, tape.leaf(Tensor({3, 5, 5}))), ShapeError);
    CHECK_THROWS_AS(conv.forward(tape, tape.leaf(Tensor({2, 2, 5}))), ShapeError);
  }

  TEST_CASE("layer gradients pass finite differences") {
    Rng rng(3);
    Conv2dLayer conv("c", 2, 2, 3);
    conv.init(rng);
    const Tensor x = random_tensor({2, 2, 6, 6}, rng);
    const Tensor w = random_tensor({2, 2, 4, 4}, rng);
    const auto result = testing::grad_check_params({&conv.weight, &conv.bias}, [&](Tape& t) {
      return reduce_sum(mul(conv.forward(t, t.leaf(x)), t.leaf(w)));
    });
    CHECK(result.max_rel_error < 1e-6);
  }
}

TEST_SUITE("maxpool2") {
  TEST_CASE("examples") {
    Tape tape;
    CHECK(maxpool2(tape.leaf(Tensor({1, 2, 2}, {1, 2, 3, 4}))).value() == Tensor({1, 1, 1}, {4}));
    CHECK(maxpool2(tape.leaf(Tensor({2, 6, 7}, 3.5))).value() == Tensor({2, 3, 3}, 3.5));
  }

  TEST_CASE("matches brute-force window scan") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor x = random_tensor({2, 5, 5}, rng);
      Tape tape;
      CHECK(maxpool2(tape.leaf(x)).value() == direct_pool(x));
    }
  }

  TEST_CASE("rejects spatial dims below two") {
    Tape tape;
    CHECK_THROWS_AS(maxpool2(tape.leaf(Tensor({1, 1, 5}))), ShapeError);
  }
}

TEST_SUITE("lstm") {
  TEST_CASE("parameter count formula") {
    LstmLayer lstm("l", 64, 112);
    CHECK(lstm.parameter_count() == 4 * ((64 + 112) * 112 + 112));
  }

  TEST_CASE("zero weights and zero state stay at zero") {
    LstmLayer lstm("l", 3, 4);
    Tape tape;
    auto state = lstm.initial_state(tape, 1);
    Rng rng(5);
    const auto next = lstm.step(tape, tape.leaf(random_tensor({1, 3}, rng)), state);
    CHECK(next.h.value() == Tensor({1, 4}, 0.0));
    CHECK(next.c.value() == Tensor({1, 4}, 0.0));
  }

  TEST_CASE("zero weights halve the carried cell") {
    LstmLayer lstm("l", 3, 4);
    Tape tape;
    const Tensor c({1, 4}, {1.0, -2.0, 0.5, 8.0});
    const LstmLayer::State prev{tape.leaf(Tensor({1, 4})), tape.leaf(c)};
    const auto next = lstm.step(tape, tape.leaf(Tensor({1, 3}, 1.0)), prev);
    CHECK(next.c.value() == Tensor({1, 4}, {0.5, -1.0, 0.25, 4.0}));
  }

  TEST_CASE("matches a scalar gate-equation oracle") {
    Rng rng(6);
    const std::size_t in = 3, hid = 4, batch = 2;
    LstmLayer lstm("l", in, hid);
    lstm.init(rng);
    const Tensor x = random_tensor({batch, in}, rng);
    const Tensor h0 = random_tensor({batch, hid}, rng);
    const Tensor c0 = random_tensor({batch, hid}, rng);
    Tape tape;
    const auto next = lstm.step(tape, tape.leaf(x), {tape.leaf(h0), tape.leaf(c0)});

    const Tensor& wx = lstm.w_input.value;
    const Tensor& wh = lstm.w_hidden.value;
    const Tensor& b = lstm.bias.value;
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t j = 0; j < hid; ++j) {
        double pre[4];
        for (std::size_t gate = 0; gate < 4; ++gate) {
          const std::size_t col = gate * hid + j;
          double s = b[col];
          for (std::size_t i = 0; i < in; ++i) s += x.at(n, i) * wx.at(i, col);
          for (std::size_t i = 0; i < hid; ++i) s += h0.at(n, i) * wh.at(i, col);
          pre[gate] = s;
        }
        const double c = sig(pre[1]) * c0.at(n, j) + sig(pre[0]) * std::tanh(pre[2]);
        const double h = sig(pre[3]) * std::tanh(c);
        CHECK(std::abs(next.c.value().at(n, j) - c) < 1e-12);
        CHECK(std::abs(next.h.value().at(n, j) - h) < 1e-12);
      }
    }
  }

  TEST_CASE("unrolled gradients pass finite differences") {
    Rng rng(7);
    for (CellActivation act : {CellActivation::Tanh, CellActivation::Relu}) {
      LstmLayer lstm("l", 3, 4, act);
      lstm.init(rng);
      const Tensor x1 = random_tensor({2, 3}, rng), x2 = random_tensor({2, 3}, rng);
      const Tensor w = random_tensor({2, 4}, rng);
      const auto result = testing::grad_check_params(
          {&lstm.w_input, &lstm.w_hidden, &lstm.bias}, [&](Tape& t) {
            auto s = lstm.initial_state(t, 2);
            s = lstm.step(t, t.leaf(x1), s);
            s = lstm.step(t, t.leaf(x2), s);
            return reduce_sum(mul(add(s.h, s.c), t.leaf(w)));
          });
      CHECK(result.max_rel_error < 1e-6);
    }
  }

  TEST_CASE("shape mismatch") {
    LstmLayer lstm("l", 3, 4);
    Tape tape;
    auto s = lstm.initial_state(tape, 2);
    CHECK_THROWS_AS(lstm.step(tape, tape.leaf(Tensor({2, 4})), s), ShapeError);
    CHECK_THROWS_AS(lstm.step(tape, tape.leaf(Tensor({3, 3})), s), ShapeError);
  }
}

TEST_SUITE("dense") {
  TEST_CASE("gradients pass finite differences") {
    Rng rng(9);
    DenseLayer dense("d", 5, 3);
    dense.init(rng);
    dense.bias.value = random_tensor({3}, rng);
    const Tensor x = random_tensor({4, 5}, rng);
    const auto result = testing::grad_check_params({&dense.weight, &dense.bias}, [&](Tape& t) {
      const Var y = dense.forward(t, t.leaf(x));
      return reduce_mean(mul(y, y));
    });
    CHECK(result.max_rel_error < 1e-6);
  }
}
