#include "tclf/model.hpp"

#include <string>

#include "tclf/error.hpp"
#include "tclf/random.hpp"

namespace tclf {

const char* to_string(TargetKind kind) {
  return kind == TargetKind::Location ? "location" : "time";
}

TargetKind target_kind_from_string(const std::string& name) {
  if (name == "location") return TargetKind::Location;
  if (name == "time") return TargetKind::Time;
  throw UsageError("unknown target '" + name + "' (expected location or time)");
}

ModelConfig ModelConfig::for_target(TargetKind kind, std::size_t window) {
  ModelConfig c;
  c.window = window;
  c.head_width = kind == TargetKind::Location ? 2 : 1;
  return c;
}

std::size_t ModelConfig::flatten_width() const {
  std::size_t extent = grid;
  std::size_t channels_out = channels;
  for (std::size_t filters : conv_filters) {
    if (extent < kernel) return 0;
    extent = (extent - kernel + 1) / 2;
    channels_out = filters;
  }
  return channels_out * extent * extent;
}

void ModelConfig::validate() const {
  if (window == 0) throw UsageError("model window must be positive");
  if (head_width == 0 || channels == 0 || encoder_width == 0 || dense_width == 0 ||
      kernel == 0 || lstm_hidden.empty() || conv_filters.empty()) {
    throw UsageError("model configuration has a zero-sized component");
  }
  std::size_t extent = grid;
  for (std::size_t filters : conv_filters) {
    if (filters == 0 || extent < kernel || (extent - kernel + 1) < 2) {
      throw UsageError("grid of " + std::to_string(grid) + " is too small for " +
                       std::to_string(conv_filters.size()) + " conv/pool stages");
    }
    extent = (extent - kernel + 1) / 2;
  }
  for (std::size_t h : lstm_hidden) {
    if (h == 0) throw UsageError("LSTM hidden size must be positive");
  }
}

LandfallModel::LandfallModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  build();
  Rng rng(derive_seed(seed, "model-init"));
  for (auto& l : convs_) l.init(rng);
  for (auto& l : encoder_dense_) l.init(rng);
  for (auto& l : lstms_) l.init(rng);
  for (auto& l : head_) l.init(rng);
}

void LandfallModel::build() {
  std::size_t in = config_.channels;
  for (std::size_t i = 0; i < config_.conv_filters.size(); ++i) {
    convs_.emplace_back("conv" + std::to_string(i), in, config_.conv_filters[i], config_.kernel);
    in = config_.conv_filters[i];
  }
  encoder_dense_.emplace_back("encoder_dense", config_.flatten_width(), config_.encoder_width);
  in = config_.encoder_width;
  for (std::size_t i = 0; i < config_.lstm_hidden.size(); ++i) {
    lstms_.emplace_back("lstm" + std::to_string(i), in, config_.lstm_hidden[i],
                        config_.cell_activation);
    in = config_.lstm_hidden[i];
  }
  head_.emplace_back("dense", in, config_.dense_width);
  head_.emplace_back("head", config_.dense_width, config_.head_width);
}

Var LandfallModel::encode(Tape& tape, const Var& frames) {
  const Shape& s = frames.shape();
  if (s.size() != 4 || s[1] != config_.channels || s[2] != config_.grid || s[3] != config_.grid) {
    throw ShapeError("encode: expected [N," + std::to_string(config_.channels) + "," +
                     std::to_string(config_.grid) + "," + std::to_string(config_.grid) +
                     "], got " + shape_str(s));
  }
  Var x = frames;
  for (auto& conv : convs_) x = maxpool2(relu(conv.forward(tape, x)));
  x = reshape(x, {s[0], config_.flatten_width()});
  return relu(encoder_dense_.front().forward(tape, x));
}

Var LandfallModel::sequence_head(Tape& tape, const Var& features) {
  const Shape& s = features.shape();
  if (s.size() != 3 || s[1] != config_.window || s[2] != config_.encoder_width) {
    throw ShapeError("sequence_head: expected [B," + std::to_string(config_.window) + "," +
                     std::to_string(config_.encoder_width) + "], got " + shape_str(s));
  }
  const std::size_t batch = s[0];
  std::vector<Var> sequence;
  for (std::size_t t = 0; t < config_.window; ++t) {
    sequence.push_back(reshape(slice(features, 1, t, 1), {batch, config_.encoder_width}));
  }
  for (auto& lstm : lstms_) {
    LstmLayer::State state = lstm.initial_state(tape, batch);
    for (Var& x : sequence) {
      state = lstm.step(tape, x, state);
      x = state.h;
    }
  }
  Var y = relu(head_[0].forward(tape, sequence.back()));
  return head_[1].forward(tape, y);
}

Var LandfallModel::forward(Tape& tape, const Var& batch) {
  const Shape& s = batch.shape();
  if (s.size() != 5 || s[1] != config_.window) {
    throw ShapeError("forward: model expects [B," + std::to_string(config_.window) +
                     ",C,H,W] windows, got " + shape_str(s));
  }
  const Var frames = reshape(batch, {s[0] * s[1], s[2], s[3], s[4]});
  const Var features = encode(tape, frames);
  return sequence_head(tape, reshape(features, {s[0], s[1], config_.encoder_width}));
}

Tensor LandfallModel::encode_timestep(const Tensor& frame) {
  Tape tape(false);
  Shape s = frame.shape();
  s.insert(s.begin(), 1);
  const Var out = encode(tape, tape.leaf(frame.reshaped(s)));
  return out.value().reshaped({config_.encoder_width});
}

Tensor LandfallModel::forward(const Tensor& sample) {
  Shape s = sample.shape();
  s.insert(s.begin(), 1);
  return predict_batch(sample.reshaped(s)).reshaped({config_.head_width});
}

Tensor LandfallModel::predict_batch(const Tensor& batch) {
  Tape tape(false);
  return forward(tape, tape.leaf(batch)).value();
}

std::vector<Parameter*> LandfallModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : convs_) out.insert(out.end(), {&l.weight, &l.bias});
  for (auto& l : encoder_dense_) out.insert(out.end(), {&l.weight, &l.bias});
  for (auto& l : lstms_) out.insert(out.end(), {&l.w_input, &l.w_hidden, &l.bias});
  for (auto& l : head_) out.insert(out.end(), {&l.weight, &l.bias});
  return out;
}

std::vector<const Parameter*> LandfallModel::parameters() const {
  auto mutable_params = const_cast<LandfallModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<Parameter*> LandfallModel::encoder_parameters() {
  std::vector<Parameter*> out;
  for (auto& l : convs_) out.insert(out.end(), {&l.weight, &l.bias});
  for (auto& l : encoder_dense_) out.insert(out.end(), {&l.weight, &l.bias});
  return out;
}

std::size_t LandfallModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

}  // namespace tclf
