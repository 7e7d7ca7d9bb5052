#include "tclf/adam.hpp"

#include <cmath>
#include <string>

#include "tclf/error.hpp"

namespace tclf {

AdamState AdamState::zeros_for(std::span<Parameter* const> params) {
  AdamState s;
  for (const Parameter* p : params) {
    s.m.push_back(Tensor::zeros_like(p->value));
    s.v.push_back(Tensor::zeros_like(p->value));
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config,
               std::int64_t t) {
  if (t < 1) throw UsageError("adam_step: step index must be >= 1");
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) +
                     " moments for " + std::to_string(params.size()) + " parameters");
  }
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape() ||
        p.grad.shape() != p.value.shape()) {
      throw ShapeError("adam_step: state shape " + shape_str(m.shape()) +
                       " does not match parameter '" + p.name + "' " +
                       shape_str(p.value.shape()));
    }
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config), state_(AdamState::zeros_for(params_)) {}

void Adam::step() { adam_step(params_, state_, config_, ++t_); }

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace tclf
