#include "tclf/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tclf/error.hpp"

namespace tclf {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  Node node;
  node.param = &p;
  node.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.is_leaf = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ShapeError("operands belong to different tapes");
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->value : n.value;
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->grad : n.grad;
}

Tensor* Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.param) {
    if (n.param->grad.shape() != n.param->value.shape()) {
      n.param->grad = Tensor::zeros_like(n.param->value);
    }
    return &n.param->grad;
  }
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return &n.grad;
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ShapeError("backward: loss belongs to a different tape");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(value(loss.id()).shape()));
  }
  if (!nodes_[loss.id()].requires_grad) return;
  for (Node& n : nodes_) {
    if (!n.is_leaf) n.grad = Tensor();
  }
  (*grad_slot(loss.id()))[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.is_leaf || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_same(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
}

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), inputs, [ia, deriv](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * deriv(x[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.length = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;
using ConstMatrixMap = Eigen::Map<const RowMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;

// C = op(A) op(B) + beta C for row-major operands, where op(A) is m x k and
// op(B) is k x n. beta is 0 or 1.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  const ConstMatrixMap ma(a, trans_a ? k : m, trans_a ? m : k, Eigen::OuterStride<>(lda));
  const ConstMatrixMap mb(b, trans_b ? n : k, trans_b ? k : n, Eigen::OuterStride<>(ldb));
  MatrixMap mc(c, m, n, Eigen::OuterStride<>(ldc));
  if (beta == 0.0) mc.setZero();
  if (trans_a && trans_b) {
    mc.noalias() += ma.transpose() * mb.transpose();
  } else if (trans_a) {
    mc.noalias() += ma.transpose() * mb;
  } else if (trans_b) {
    mc.noalias() += ma * mb.transpose();
  } else {
    mc.noalias() += ma * mb;
  }
}

struct ConvGeometry {
  std::size_t batch, channels, height, width, out_channels, kernel, out_h, out_w;
  std::size_t col_rows() const { return channels * kernel * kernel; }
  std::size_t col_cols() const { return out_h * out_w; }
};

void im2col(const double* image, const ConvGeometry& g, double* col) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = col + ((c * k + ki) * k + kj) * g.col_cols();
        const double* src = image + (c * g.height + ki) * g.width + kj;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          std::copy_n(src + oh * g.width, g.out_w, row + oh * g.out_w);
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* image) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = col + ((c * k + ki) * k + kj) * g.col_cols();
        double* dst = image + (c * g.height + ki) * g.width + kj;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            dst[oh * g.width + ow] += row[oh * g.out_w + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const Var inputs[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), inputs, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (Tensor* gx = t.grad_slot(id)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const Var inputs[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), inputs, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_slot(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = t.grad_slot(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const Var inputs[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), inputs, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (Tensor* ga = t.grad_slot(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_slot(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) shape_mismatch("matmul", sa, sb);
  const int m = static_cast<int>(sa[0]);
  const int k = static_cast<int>(sa[1]);
  const int n = static_cast<int>(sb[1]);
  Tensor y({sa[0], sb[1]});
  gemm(false, false, m, n, k, a.value().ptr(), k, b.value().ptr(), n, 0.0, y.ptr(), n);
  const Var inputs[] = {a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), inputs, [ia, ib, m, n, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_slot(ia)) {
      gemm(false, true, m, k, n, g.ptr(), n, t.value(ib).ptr(), n, 1.0, ga->ptr(), k);
    }
    if (Tensor* gb = t.grad_slot(ib)) {
      gemm(true, false, k, n, m, t.value(ia).ptr(), k, g.ptr(), n, 1.0, gb->ptr(), n);
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), inputs, [ia](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& sa = a.shape();
  if (axis >= sa.size() || length == 0 || start + length > sa[axis]) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") on axis " + std::to_string(axis) +
                     " is invalid for shape " + shape_str(sa));
  }
  const AxisSplit s = split_axis(sa, axis);
  Shape out_shape = sa;
  out_shape[axis] = length;
  Tensor y(out_shape);
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.ptr() + (o * s.length + start) * s.inner, length * s.inner,
                y.ptr() + o * length * s.inner);
  }
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), inputs, [ia, s, start, length](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& g = t.grad(self);
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = ga->ptr() + (o * s.length + start) * s.inner;
      const double* src = g.ptr() + o * length * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> lengths;
  for (const Var& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) shape_mismatch("concat", first, probe);
    lengths.push_back(probe[axis]);
    out_shape[axis] += probe[axis];
    probe[axis] = first[axis];
    if (probe != first) shape_mismatch("concat", first, p.shape());
  }
  const AxisSplit s = split_axis(out_shape, axis);
  Tensor y(out_shape);
  std::size_t offset = 0;
  std::vector<std::size_t> ids;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor& x = parts[pi].value();
    const std::size_t len = lengths[pi];
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(x.ptr() + o * len * s.inner, len * s.inner,
                  y.ptr() + (o * s.length + offset) * s.inner);
    }
    offset += len;
    ids.push_back(parts[pi].id());
  }
  return parts.front().tape().record(
      std::move(y), parts, [ids, lengths, s](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
          const std::size_t len = lengths[pi];
          if (Tensor* gx = t.grad_slot(ids[pi])) {
            for (std::size_t o = 0; o < s.outer; ++o) {
              const double* src = g.ptr() + (o * s.length + offset) * s.inner;
              double* dst = gx->ptr() + o * len * s.inner;
              for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
            }
          }
          offset += len;
        }
      });
}

Var reduce_sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(total), inputs, [ia](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const double g = t.grad(self)[0];
    for (double& v : ga->data()) v += g;
  });
}

Var reduce_mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(total / n), inputs, [ia, n](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const double g = t.grad(self)[0] / n;
    for (double& v : ga->data()) v += g;
  });
}

Var repeat_rows(const Var& a, std::size_t rows) {
  const Shape& sa = a.shape();
  if (sa.size() != 1 || rows == 0) {
    throw ShapeError("repeat_rows: expected a vector and rows > 0, got " + shape_str(sa));
  }
  const std::size_t n = sa[0];
  Tensor y({rows, n});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.value().ptr(), n, y.ptr() + r * n);
  const Var inputs[] = {a};
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), inputs, [ia, rows, n](Tape& t, std::size_t self) {
    Tensor* ga = t.grad_slot(ia);
    if (!ga) return;
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < n; ++j) (*ga)[j] += g[r * n + j];
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  const bool batched = sx.size() == 4;
  if ((sx.size() != 3 && !batched) || sw.size() != 4 || sw[2] != sw[3]) {
    shape_mismatch("conv2d", sx, sw);
  }
  ConvGeometry g{};
  g.batch = batched ? sx[0] : 1;
  g.channels = sx[sx.size() - 3];
  g.height = sx[sx.size() - 2];
  g.width = sx[sx.size() - 1];
  g.out_channels = sw[0];
  g.kernel = sw[2];
  if (sw[1] != g.channels || g.height < g.kernel || g.width < g.kernel) {
    shape_mismatch("conv2d", sx, sw);
  }
  if (bias.shape() != Shape{g.out_channels}) shape_mismatch("conv2d bias", bias.shape(), {g.out_channels});
  g.out_h = g.height - g.kernel + 1;
  g.out_w = g.width - g.kernel + 1;

  Shape out_shape = batched ? Shape{g.batch, g.out_channels, g.out_h, g.out_w}
                            : Shape{g.out_channels, g.out_h, g.out_w};
  Tensor y(out_shape);
  const std::size_t in_stride = g.channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * g.col_cols();
  std::vector<double> col(g.col_rows() * g.col_cols());
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  const int m = static_cast<int>(g.out_channels);
  const int n = static_cast<int>(g.col_cols());
  const int k = static_cast<int>(g.col_rows());
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(xv.ptr() + b * in_stride, g, col.data());
    double* out = y.ptr() + b * out_stride;
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      std::fill_n(out + o * g.col_cols(), g.col_cols(), bv[o]);
    }
    gemm(false, false, m, n, k, wv.ptr(), k, col.data(), n, 1.0, out, n);
  }

  const Var inputs[] = {x, weight, bias};
  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape().record(
      std::move(y), inputs,
      [ix, iw, ib, g, in_stride, out_stride, m, n, k](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& xv = t.value(ix);
        const Tensor& wv = t.value(iw);
        Tensor* gx = t.grad_slot(ix);
        Tensor* gw = t.grad_slot(iw);
        Tensor* gb = t.grad_slot(ib);
        std::vector<double> col(g.col_rows() * g.col_cols());
        for (std::size_t b = 0; b < g.batch; ++b) {
          const double* gout = gy.ptr() + b * out_stride;
          if (gb) {
            for (std::size_t o = 0; o < g.out_channels; ++o) {
              double s = 0.0;
              for (std::size_t p = 0; p < g.col_cols(); ++p) s += gout[o * g.col_cols() + p];
              (*gb)[o] += s;
            }
          }
          if (gw) {
            im2col(xv.ptr() + b * in_stride, g, col.data());
            gemm(false, true, m, k, n, gout, n, col.data(), n, 1.0, gw->ptr(), k);
          }
          if (gx) {
            gemm(true, false, k, n, m, wv.ptr(), k, gout, n, 0.0, col.data(), n);
            col2im_add(col.data(), g, gx->ptr() + b * in_stride);
          }
        }
      });
}

Var maxpool2(const Var& x) {
  const Shape& sx = x.shape();
  if (sx.size() < 2 || sx[sx.size() - 2] < 2 || sx[sx.size() - 1] < 2) {
    throw ShapeError("maxpool2: spatial dims must be >= 2, got " + shape_str(sx));
  }
  const std::size_t h = sx[sx.size() - 2];
  const std::size_t w = sx[sx.size() - 1];
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  std::size_t planes = 1;
  for (std::size_t d = 0; d + 2 < sx.size(); ++d) planes *= sx[d];
  Shape out_shape = sx;
  out_shape[sx.size() - 2] = oh;
  out_shape[sx.size() - 1] = ow;
  Tensor y(out_shape);
  std::vector<std::size_t> argmax(y.size());
  const Tensor& xv = x.value();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* in = xv.ptr() + p * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (2 * i) * w + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (2 * i + di) * w + 2 * j + dj;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t out_idx = (p * oh + i) * ow + j;
        y[out_idx] = in[best];
        argmax[out_idx] = p * h * w + best;
      }
    }
  }
  const Var inputs[] = {x};
  const std::size_t ix = x.id();
  return x.tape().record(std::move(y), inputs,
                         [ix, argmax = std::move(argmax)](Tape& t, std::size_t self) {
                           Tensor* gx = t.grad_slot(ix);
                           if (!gx) return;
                           const Tensor& g = t.grad(self);
                           for (std::size_t i = 0; i < g.size(); ++i) (*gx)[argmax[i]] += g[i];
                         });
}

}  // namespace tclf
