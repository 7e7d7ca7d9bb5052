#pragma once

// Central finite-difference oracle used by the gradient tests. It only
// evaluates forward values, so it stays independent of the backward rules
// it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tclf/autodiff.hpp"
#include "tclf/random.hpp"

namespace tclf::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// `loss` maps leaf Vars (one per input tensor) to a scalar Var.
using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline GradCheckResult grad_check(std::vector<Tensor> inputs, const LossFn& loss,
                                  double step = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
    tape.backward(loss(tape, leaves));
    for (const Var& v : leaves) {
      analytic.push_back(v.grad().empty() ? Tensor::zeros_like(v.value()) : v.grad());
    }
  }
  const auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape tape(false);
    std::vector<Var> leaves;
    for (const Tensor& t : xs) leaves.push_back(tape.leaf(t));
    return loss(tape, leaves).value()[0];
  };
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = inputs[k][i];
      inputs[k][i] = original + step;
      const double up = evaluate(inputs);
      inputs[k][i] = original - step;
      const double down = evaluate(inputs);
      inputs[k][i] = original;
      const double numeric = (up - down) / (2.0 * step);
      result.max_rel_error =
          std::max(result.max_rel_error, relative_error(analytic[k][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

/// Same check against Parameters (e.g. every weight of a model).
inline GradCheckResult grad_check_params(const std::vector<Parameter*>& params,
                                         const std::function<Var(Tape&)>& loss,
                                         double step = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  const auto evaluate = [&] {
    Tape tape(false);
    return loss(tape).value()[0];
  };
  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + step;
      const double up = evaluate();
      p->value[i] = original - step;
      const double down = evaluate();
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(p->grad[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace tclf::testing
