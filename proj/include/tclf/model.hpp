#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tclf/autodiff.hpp"
#include "tclf/layers.hpp"

namespace tclf {

inline constexpr std::size_t kInputChannels = 12;

/// Channel order of every encoder input frame.
inline constexpr std::array<const char*, kInputChannels> kChannelOrder = {
    "lats", "longs", "u225", "v225", "z225", "u500",
    "v500", "z500",  "u700", "v700", "z700", "sst"};

enum class TargetKind { Location, Time };

const char* to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& name);

/// Architecture descriptor. Each conv layer is 3x3 valid + ReLU + 2x2
/// max-pool; the flattened maps go through a ReLU dense layer to form the
/// per-timestep feature vector. LSTM layers run over the T feature vectors
/// and the last hidden state feeds a ReLU dense layer and a linear head.
struct ModelConfig {
  std::size_t window = 8;  // T
  std::size_t head_width = 2;
  std::size_t channels = kInputChannels;
  std::size_t grid = 33;
  std::vector<std::size_t> conv_filters = {16, 32, 32};
  std::size_t kernel = 3;
  std::size_t encoder_width = 64;
  std::vector<std::size_t> lstm_hidden = {112, 64};
  std::size_t dense_width = 32;
  CellActivation cell_activation = CellActivation::Tanh;

  static ModelConfig for_target(TargetKind kind, std::size_t window);

  /// Flattened size of the last pooled feature maps.
  std::size_t flatten_width() const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// TimeDistributed CNN encoder + stacked LSTM + dense head. The encoder has
/// one parameter set shared by every timestep.
class LandfallModel {
 public:
  LandfallModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }

  /// frames: [N, C, H, W] -> [N, encoder_width].
  Var encode(Tape& tape, const Var& frames);

  /// features: [B, T, encoder_width] -> [B, head_width].
  Var sequence_head(Tape& tape, const Var& features);

  /// batch: [B, T, C, H, W] -> [B, head_width].
  Var forward(Tape& tape, const Var& batch);

  /// Gradient-free convenience wrappers.
  Tensor encode_timestep(const Tensor& frame);  // [C,H,W] -> [encoder_width]
  Tensor forward(const Tensor& sample);         // [T,C,H,W] -> [head_width]
  Tensor predict_batch(const Tensor& batch);    // [B,T,C,H,W] -> [B,head_width]

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  /// Parameters belonging to the per-timestep encoder only.
  std::vector<Parameter*> encoder_parameters();

 private:
  void build();

  ModelConfig config_;
  std::vector<Conv2dLayer> convs_;
  std::vector<DenseLayer> encoder_dense_;
  std::vector<LstmLayer> lstms_;
  std::vector<DenseLayer> head_;
};

}  // namespace tclf
