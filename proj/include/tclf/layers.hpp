#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tclf/autodiff.hpp"
#include "tclf/random.hpp"
#include "tclf/tensor.hpp"

namespace tclf {

/// Valid 2-D convolution with square kernels. weight: [out, in, k, k].
class Conv2dLayer {
 public:
  Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
              std::size_t kernel);

  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);

  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }
  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t parameter_count() const { return weight.value.size() + bias.value.size(); }

  Parameter weight;
  Parameter bias;

 private:
  std::size_t in_channels_;
  std::size_t out_channels_;
  std::size_t kernel_;
};

/// y = x W + b over a batch of row vectors. weight: [in, out].
class DenseLayer {
 public:
  DenseLayer(std::string name, std::size_t in_features, std::size_t out_features);

  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  std::size_t parameter_count() const { return weight.value.size() + bias.value.size(); }

  Parameter weight;
  Parameter bias;

 private:
  std::size_t in_;
  std::size_t out_;
};

enum class CellActivation { Tanh, Relu };

const char* to_string(CellActivation act);
CellActivation cell_activation_from_string(const std::string& name);

/// Standard LSTM cell without peepholes. The four gate blocks are packed
/// along the last axis in the order input, forget, candidate, output:
///   i, f, o = sigmoid(x Wx + h Wh + b)   g = act(...)
///   c' = f * c + i * g                    h' = o * act(c')
/// `act` is tanh unless configured otherwise.
class LstmLayer {
 public:
  struct State {
    Var h;
    Var c;
  };

  LstmLayer(std::string name, std::size_t input_size, std::size_t hidden_size,
            CellActivation activation = CellActivation::Tanh);

  void init(Rng& rng);

  /// x_t, h_prev, c_prev: [batch, input] / [batch, hidden].
  State step(Tape& tape, const Var& x_t, const State& prev);

  /// Zero state for a batch.
  State initial_state(Tape& tape, std::size_t batch) const;

  std::size_t input_size() const noexcept { return input_; }
  std::size_t hidden_size() const noexcept { return hidden_; }
  CellActivation activation() const noexcept { return activation_; }
  std::size_t parameter_count() const {
    return w_input.value.size() + w_hidden.value.size() + bias.value.size();
  }

  Parameter w_input;   // [input, 4 * hidden]
  Parameter w_hidden;  // [hidden, 4 * hidden]
  Parameter bias;      // [4 * hidden]

 private:
  std::size_t input_;
  std::size_t hidden_;
  CellActivation activation_;
};

}  // namespace tclf
