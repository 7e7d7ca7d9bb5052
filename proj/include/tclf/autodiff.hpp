#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tclf/tensor.hpp"

namespace tclf {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape is alive and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  bool requires_grad() const;

  /// Accumulated gradient; an empty tensor when nothing has flowed here.
  const Tensor& grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records primitive operations in execution order so gradients can be
/// propagated in reverse. Entries only ever reference earlier entries.
///
/// Leaf gradients (including Parameter::grad) accumulate across backward
/// calls. Intermediate gradients are recomputed on every call.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  /// References the parameter without copying it. With gradients enabled,
  /// backward accumulates into `p.grad`.
  Var param(Parameter& p);

  void backward(const Var& loss);

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Interface used by the primitive operations.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor& grad(std::size_t id) const;
  /// Gradient accumulator of `id`, zero-initialized on first use. Returns
  /// nullptr when `id` does not require a gradient.
  Tensor* grad_slot(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = true;
    BackwardFn backward;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

// Primitive operations. Elementwise operations require identical shapes;
// there is no implicit broadcasting. Violations throw ShapeError naming the
// operation and the offending shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n]
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var reshape(const Var& a, Shape shape);
Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length);
Var concat(std::span<const Var> parts, std::size_t axis);
Var reduce_sum(const Var& a);   // -> [1]
Var reduce_mean(const Var& a);  // -> [1]

/// [n] -> [rows, n], copying the vector into every row.
Var repeat_rows(const Var& a, std::size_t rows);

/// Valid (unpadded, stride 1) cross-correlation plus per-channel bias.
/// x: [N,C,H,W] or [C,H,W]; weight: [O,C,k,k]; bias: [O].
Var conv2d(const Var& x, const Var& weight, const Var& bias);

/// 2x2 window, stride 2, over the last two axes. A trailing odd row or
/// column is dropped.
Var maxpool2(const Var& x);

}  // namespace tclf
