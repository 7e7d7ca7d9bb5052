#include "tclf/layers.hpp"

#include <cmath>

#include "tclf/error.hpp"

namespace tclf {

namespace {

void fill_uniform(Tensor& t, Rng& rng, double limit) {
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
}

}  // namespace

Conv2dLayer::Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
                         std::size_t kernel)
    : weight(name + ".weight", Tensor({out_channels, in_channels, kernel, kernel})),
      bias(name + ".bias", Tensor({out_channels})),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel) {}

void Conv2dLayer::init(Rng& rng) {
  const double area = static_cast<double>(kernel_ * kernel_);
  const double fan_in = static_cast<double>(in_channels_) * area;
  const double fan_out = static_cast<double>(out_channels_) * area;
  fill_uniform(weight.value, rng, std::sqrt(6.0 / (fan_in + fan_out)));
  bias.value.fill(0.0);
}

Var Conv2dLayer::forward(Tape& tape, const Var& x) {
  return conv2d(x, tape.param(weight), tape.param(bias));
}

DenseLayer::DenseLayer(std::string name, std::size_t in_features, std::size_t out_features)
    : weight(name + ".weight", Tensor({in_features, out_features})),
      bias(name + ".bias", Tensor({out_features})),
      in_(in_features),
      out_(out_features) {}

void DenseLayer::init(Rng& rng) {
  fill_uniform(weight.value, rng, std::sqrt(6.0 / static_cast<double>(in_ + out_)));
  bias.value.fill(0.0);
}

Var DenseLayer::forward(Tape& tape, const Var& x) {
  const Shape& sx = x.shape();
  if (sx.size() != 2 || sx[1] != in_) {
    throw ShapeError("dense '" + weight.name + "': expected [batch," + std::to_string(in_) +
                     "], got " + shape_str(sx));
  }
  return add(matmul(x, tape.param(weight)), repeat_rows(tape.param(bias), sx[0]));
}

const char* to_string(CellActivation act) {
  return act == CellActivation::Relu ? "relu" : "tanh";
}

CellActivation cell_activation_from_string(const std::string& name) {
  if (name == "tanh") return CellActivation::Tanh;
  if (name == "relu") return CellActivation::Relu;
  throw FormatError("unknown LSTM cell activation '" + name + "'");
}

LstmLayer::LstmLayer(std::string name, std::size_t input_size, std::size_t hidden_size,
                     CellActivation activation)
    : w_input(name + ".w_input", Tensor({input_size, 4 * hidden_size})),
      w_hidden(name + ".w_hidden", Tensor({hidden_size, 4 * hidden_size})),
      bias(name + ".bias", Tensor({4 * hidden_size})),
      input_(input_size),
      hidden_(hidden_size),
      activation_(activation) {}

void LstmLayer::init(Rng& rng) {
  const double limit = std::sqrt(1.0 / static_cast<double>(hidden_));
  fill_uniform(w_input.value, rng, limit);
  fill_uniform(w_hidden.value, rng, limit);
  fill_uniform(bias.value, rng, limit);
}

LstmLayer::State LstmLayer::initial_state(Tape& tape, std::size_t batch) const {
  return {tape.leaf(Tensor({batch, hidden_})), tape.leaf(Tensor({batch, hidden_}))};
}

LstmLayer::State LstmLayer::step(Tape& tape, const Var& x_t, const State& prev) {
  const Shape& sx = x_t.shape();
  if (sx.size() != 2 || sx[1] != input_) {
    throw ShapeError("lstm '" + w_input.name + "': expected input [batch," +
                     std::to_string(input_) + "], got " + shape_str(sx));
  }
  const Shape state_shape{sx[0], hidden_};
  if (prev.h.shape() != state_shape || prev.c.shape() != state_shape) {
    throw ShapeError("lstm '" + w_input.name + "': state shape " + shape_str(prev.h.shape()) +
                     " does not match " + shape_str(state_shape));
  }
  const auto act = [this](const Var& v) {
    return activation_ == CellActivation::Relu ? relu(v) : tclf::tanh(v);
  };
  const Var pre = add(add(matmul(x_t, tape.param(w_input)),
                          matmul(prev.h, tape.param(w_hidden))),
                      repeat_rows(tape.param(bias), sx[0]));
  const Var i = sigmoid(slice(pre, 1, 0, hidden_));
  const Var f = sigmoid(slice(pre, 1, hidden_, hidden_));
  const Var g = act(slice(pre, 1, 2 * hidden_, hidden_));
  const Var o = sigmoid(slice(pre, 1, 3 * hidden_, hidden_));
  const Var c = add(mul(f, prev.c), mul(i, g));
  const Var h = mul(o, act(c));
  return {h, c};
}

}  // namespace tclf
