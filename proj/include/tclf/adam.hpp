#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tclf/tensor.hpp"

namespace tclf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, one pair per parameter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState zeros_for(std::span<Parameter* const> params);
};

/// One bias-corrected Adam update at step `t` (1-based). Reads each
/// parameter's grad and leaves it untouched.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config,
               std::int64_t t);

/// Owns the moment state and step counter for a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config);

  void step();
  void zero_grad();
  std::int64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  AdamState state_;
  std::int64_t t_ = 0;
};

}  // namespace tclf
