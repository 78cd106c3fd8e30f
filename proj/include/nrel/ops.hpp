#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nrel/kernels.hpp"
#include "nrel/rng.hpp"
#include "nrel/tape.hpp"

namespace nrel::ad {

enum class Activation { sigmoid, tanh };

template <typename T>
inline T sigmoid_scalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

namespace detail {

inline void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

inline void require_matrix(const Shape& s, const char* op, const char* which) {
  if (s.size() != 2)
    throw ShapeError(std::string(op) + ": " + which + " must be a matrix, got " + shape_str(s));
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace detail

/// a (m x k) * b (k x n)
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  auto& tape = *a.tape;
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require_matrix(av.shape(), "matmul", "lhs");
  detail::require_matrix(bv.shape(), "matmul", "rhs");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k)
    throw ShapeError("matmul: inner extents differ, " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  Tensor<T> out({m, n});
  kernels::gemm_nn(tape.exec(), av.data(), bv.data(), out.data(), m, k, n);
  return tape.record(std::move(out), {a, b}, [a, b, m, k, n](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    if (t.requires_grad(a.id))
      kernels::gemm_nt(t.exec(), g.data(), t.value(b.id).data(), t.grad_buffer(a.id).data(), m, n, k);
    if (t.requires_grad(b.id))
      kernels::gemm_tn(t.exec(), t.value(a.id).data(), g.data(), t.grad_buffer(b.id).data(), m, k, n);
  }, "matmul");
}

/// a (m x k) * b^T where b is (n x k); weights are stored output-major.
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  auto& tape = *a.tape;
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require_matrix(av.shape(), "matmul_nt", "lhs");
  detail::require_matrix(bv.shape(), "matmul_nt", "rhs");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[0];
  if (bv.shape()[1] != k)
    throw ShapeError("matmul_nt: inner extents differ, " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()) + "^T");
  Tensor<T> out({m, n});
  kernels::gemm_nt(tape.exec(), av.data(), bv.data(), out.data(), m, k, n);
  return tape.record(std::move(out), {a, b}, [a, b, m, k, n](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    if (t.requires_grad(a.id))
      kernels::gemm_nn(t.exec(), g.data(), t.value(b.id).data(), t.grad_buffer(a.id).data(), m, n, k);
    if (t.requires_grad(b.id))
      kernels::gemm_tn(t.exec(), g.data(), t.value(a.id).data(), t.grad_buffer(b.id).data(), m, n, k);
  }, "matmul_nt");
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  auto& tape = *a.tape;
  detail::require_same(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  kernels::zip(tape.exec(), a.value().data(), b.value().data(), out.data(), out.size(),
               [](T x, T y) { return x + y; });
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    if (t.requires_grad(a.id)) detail::accumulate(t.grad_buffer(a.id), g);
    if (t.requires_grad(b.id)) detail::accumulate(t.grad_buffer(b.id), g);
  }, "add");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  auto& tape = *a.tape;
  detail::require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  kernels::zip(tape.exec(), a.value().data(), b.value().data(), out.data(), out.size(),
               [](T x, T y) { return x * y; });
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    const auto& av = t.value(a.id);
    const auto& bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  }, "mul");
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  auto& tape = *a.tape;
  Tensor<T> out(a.shape());
  kernels::map(tape.exec(), a.value().data(), out.data(), out.size(), [](T x) { return sigmoid_scalar(x); });
  return tape.record(std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
  }, "sigmoid");
}

template <typename T>
Var<T> tanh(Var<T> a) {
  auto& tape = *a.tape;
  Tensor<T> out(a.shape());
  kernels::map(tape.exec(), a.value().data(), out.data(), out.size(), [](T x) { return std::tanh(x); });
  return tape.record(std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
  }, "tanh");
}

template <typename T>
Var<T> activate(Var<T> a, Activation kind) {
  return kind == Activation::sigmoid ? sigmoid(a) : ad::tanh(a);
}

enum class Elementwise { add, mul, sigmoid, tanh };

/// Dispatches on kind; binary kinds take two operands, unary kinds one.
template <typename T>
Var<T> elementwise(Elementwise kind, const std::vector<Var<T>>& operands) {
  const std::size_t want = (kind == Elementwise::add || kind == Elementwise::mul) ? 2 : 1;
  if (operands.size() != want)
    throw std::invalid_argument("elementwise: expected " + std::to_string(want) + " operands, got " +
                                std::to_string(operands.size()));
  switch (kind) {
    case Elementwise::add: return add(operands[0], operands[1]);
    case Elementwise::mul: return mul(operands[0], operands[1]);
    case Elementwise::sigmoid: return sigmoid(operands[0]);
    case Elementwise::tanh: return ad::tanh(operands[0]);
  }
  throw std::invalid_argument("elementwise: unknown kind");
}

/// x (m x n) + b (n) broadcast over rows.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
  auto& tape = *x.tape;
  const auto& xv = x.value();
  const auto& bv = b.value();
  if (bv.rank() != 1 || bv.size() != xv.cols())
    throw ShapeError("add_bias: bias " + shape_str(bv.shape()) + " does not match " + shape_str(xv.shape()));
  Tensor<T> out(xv.shape());
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] + bv[c];
  return tape.record(std::move(out), {x, b}, [x, b, rows, cols](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    if (t.requires_grad(x.id)) detail::accumulate(t.grad_buffer(x.id), g);
    if (t.requires_grad(b.id)) {
      auto& gb = t.grad_buffer(b.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
    }
  }, "add_bias");
}

/// Concatenation along axis 0 or 1 (rank 2), or axis 0 (rank 1).
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: empty part list");
  auto& tape = *parts.front().tape;
  const Shape& s0 = parts.front().shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " + shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
    if (!ok) throw ShapeError("concat: incompatible extents " + shape_str(s0) + " and " + shape_str(s));
    out_shape[axis] += s[axis];
  }
  if (parts.size() == 1) return parts.front();

  // Rows of the result are [outer][axis extent][inner]; inner is 1 unless axis 0 of a matrix.
  const std::size_t outer = (axis == 0) ? 1 : out_shape[0];
  const std::size_t inner = (axis + 1 < out_shape.size()) ? out_shape[axis + 1] : 1;
  Tensor<T> out(out_shape);
  const std::size_t out_stride = out_shape[axis] * inner;
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    const auto& v = p.value();
    const std::size_t chunk = v.shape()[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.data() + o * chunk, chunk, out.data() + o * out_stride + offset);
    offsets.push_back(offset);
    offset += chunk;
  }
  return tape.record(std::move(out), std::span<const Var<T>>(parts),
                     [parts, offsets, outer, inner, out_stride, axis](Tape<T>& t, std::size_t self) {
                       const auto& g = *t.grad(self);
                       for (std::size_t i = 0; i < parts.size(); ++i) {
                         if (!t.requires_grad(parts[i].id)) continue;
                         auto& gp = t.grad_buffer(parts[i].id);
                         const std::size_t chunk = t.value(parts[i].id).shape()[axis] * inner;
                         for (std::size_t o = 0; o < outer; ++o)
                           for (std::size_t c = 0; c < chunk; ++c) gp[o * chunk + c] += g[o * out_stride + offsets[i] + c];
                       }
                     },
                     "concat");
}

/// Left-to-right sum; the empty list gives zeros of zero_shape.
template <typename T>
Var<T> sum_vectors(Tape<T>& tape, const std::vector<Var<T>>& vs, const Shape& zero_shape) {
  if (vs.empty()) return tape.constant(Tensor<T>(zero_shape));
  for (const auto& v : vs) detail::require_same(v.shape(), zero_shape, "sum_vectors");
  if (vs.size() == 1) return vs.front();
  Tensor<T> out(zero_shape);
  for (const auto& v : vs) detail::accumulate(out, v.value());
  return tape.record(std::move(out), std::span<const Var<T>>(vs), [vs](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    for (const auto& v : vs)
      if (t.requires_grad(v.id)) detail::accumulate(t.grad_buffer(v.id), g);
  }, "sum_vectors");
}

/// Grouped row sums (neighbor aggregation) in canonical list order.
template <typename T>
Var<T> segment_sum(Var<T> x, std::shared_ptr<const kernels::Segments> seg) {
  auto& tape = *x.tape;
  const auto& xv = x.value();
  detail::require_matrix(xv.shape(), "segment_sum", "input");
  if (xv.rows() != seg->num_inputs)
    throw ShapeError("segment_sum: input has " + std::to_string(xv.rows()) + " rows, segments expect " +
                     std::to_string(seg->num_inputs));
  const std::size_t d = xv.cols();
  Tensor<T> out({seg->num_segments(), d});
  kernels::segment_sum(tape.exec(), xv.data(), out.data(), d, *seg);
  return tape.record(std::move(out), {x}, [x, seg, d](Tape<T>& t, std::size_t self) {
    kernels::segment_sum_transpose(t.exec(), t.grad(self)->data(), t.grad_buffer(x.id).data(), d, *seg);
  }, "segment_sum");
}

/// Rows of x picked by index (repeats allowed).
template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::size_t> idx) {
  auto& tape = *x.tape;
  const auto& xv = x.value();
  detail::require_matrix(xv.shape(), "gather_rows", "input");
  if (idx.empty()) throw ShapeError("gather_rows: empty index list");
  const std::size_t d = xv.cols();
  Tensor<T> out({idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= xv.rows())
      throw std::out_of_range("gather_rows: row " + std::to_string(idx[r]) + " of " + std::to_string(xv.rows()));
    std::copy_n(xv.data() + idx[r] * d, d, out.data() + r * d);
  }
  return tape.record(std::move(out), {x}, [x, idx = std::move(idx), d](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) gx[idx[r] * d + c] += g[r * d + c];
  }, "gather_rows");
}

/// Row r of a matrix as a 1 x n matrix.
template <typename T>
Var<T> row(Var<T> x, std::size_t r) {
  return gather_rows(x, std::vector<std::size_t>{r});
}

/// Columns [begin, begin+count) of a matrix.
template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t count) {
  auto& tape = *x.tape;
  const auto& xv = x.value();
  detail::require_matrix(xv.shape(), "slice_cols", "input");
  if (count == 0 || begin + count > xv.cols())
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                     ") outside " + shape_str(xv.shape()));
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Tensor<T> out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * cols + begin, count, out.data() + r * count);
  return tape.record(std::move(out), {x}, [x, begin, count, rows, cols](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) gx[r * cols + begin + c] += g[r * count + c];
  }, "slice_cols");
}

/// Mean of the listed rows as a 1 x n matrix.
template <typename T>
Var<T> mean_rows(Var<T> x, std::vector<std::size_t> idx) {
  auto& tape = *x.tape;
  const auto& xv = x.value();
  detail::require_matrix(xv.shape(), "mean_rows", "input");
  if (idx.empty()) throw ShapeError("mean_rows: empty row list");
  const std::size_t d = xv.cols();
  const T scale = T(1) / static_cast<T>(idx.size());
  Tensor<T> out({1, d});
  for (std::size_t r : idx) {
    if (r >= xv.rows()) throw std::out_of_range("mean_rows: row " + std::to_string(r));
    for (std::size_t c = 0; c < d; ++c) out[c] += xv[r * d + c];
  }
  for (std::size_t c = 0; c < d; ++c) out[c] *= scale;
  return tape.record(std::move(out), {x}, [x, idx = std::move(idx), d, scale](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t r : idx)
      for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[c] * scale;
  }, "mean_rows");
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  auto& tape = *x.tape;
  if (shape_numel(shape) != x.value().size())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor<T> out(std::move(shape), x.value().storage());
  return tape.record(std::move(out), {x}, [x](Tape<T>& t, std::size_t self) {
    detail::accumulate(t.grad_buffer(x.id), *t.grad(self));
  }, "reshape");
}

/// Sum of all elements as shape (1).
template <typename T>
Var<T> sum_all(Var<T> x) {
  auto& tape = *x.tape;
  T s = 0;
  for (T v : x.value().values()) s += v;
  return tape.record(Tensor<T>({1}, std::vector<T>{s}), {x}, [x](Tape<T>& t, std::size_t self) {
    const T g = (*t.grad(self))[0];
    for (auto& v : t.grad_buffer(x.id).storage()) v += g;
  }, "sum_all");
}

/// Multiplies by a fixed mask (inverted-dropout scaling already folded in).
template <typename T>
Var<T> apply_mask(Var<T> x, Tensor<T> mask) {
  auto& tape = *x.tape;
  detail::require_same(x.shape(), mask.shape(), "apply_mask");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * mask[i];
  return tape.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  }, "dropout");
}

/// Inverted-dropout mask: zero with probability rate, 1/(1-rate) otherwise.
template <typename T>
Tensor<T> dropout_mask(const Shape& shape, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
  Tensor<T> mask(shape);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& m : mask.storage()) m = rng.uniform() < rate ? T(0) : keep;
  return mask;
}

/// Inverted dropout. Identity when rate is 0 or outside training.
template <typename T>
Var<T> dropout(Var<T> x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  return apply_mask(x, dropout_mask<T>(x.shape(), rate, rng));
}

template <typename T>
struct SoftmaxLoss {
  Var<T> loss;
  std::vector<T> probs;
};

template <typename T>
std::vector<T> softmax(std::span<const T> z) {
  T mx = z[0];
  for (T v : z) mx = std::max(mx, v);
  std::vector<T> p(z.size());
  T sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - mx));
  for (auto& v : p) v /= sum;
  return p;
}

/// Max-subtracted softmax and -log p(gold). Logits may be (L) or (1 x L).
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(Var<T> logits, std::size_t gold) {
  auto& tape = *logits.tape;
  const auto z = logits.value().values();
  if (gold >= z.size())
    throw std::out_of_range("softmax_cross_entropy: gold class " + std::to_string(gold) + " with " +
                            std::to_string(z.size()) + " logits");
  T mx = z[0];
  for (T v : z) mx = std::max(mx, v);
  T sum = 0;
  for (T v : z) sum += std::exp(v - mx);
  const T log_z = mx + std::log(sum);
  auto probs = softmax<T>(z);
  const T loss = log_z - z[gold];
  auto var = tape.record(Tensor<T>({1}, std::vector<T>{loss}), {logits},
                         [logits, probs, gold](Tape<T>& t, std::size_t self) {
                           const T g = (*t.grad(self))[0];
                           auto& gl = t.grad_buffer(logits.id);
                           for (std::size_t i = 0; i < probs.size(); ++i)
                             gl[i] += g * (probs[i] - (i == gold ? T(1) : T(0)));
                         },
                         "softmax_cross_entropy");
  return {var, std::move(probs)};
}

/// Scales a scalar loss (used for batch means).
template <typename T>
Var<T> scale(Var<T> x, T s) {
  auto& tape = *x.tape;
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  return tape.record(std::move(out), {x}, [x, s](Tape<T>& t, std::size_t self) {
    const auto& g = *t.grad(self);
    auto& gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
  }, "scale");
}

}  // namespace nrel::ad
