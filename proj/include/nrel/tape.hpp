#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "nrel/kernels.hpp"
#include "nrel/tensor.hpp"

namespace nrel {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape != nullptr; }
};

/// Reverse-mode tape. Nodes are appended in forward order; backward walks
/// them in exactly the reverse order. Leaves may view caller-owned tensors,
/// which must outlive the tape.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true, kernels::Exec exec = {}) : record_(record), exec_(exec) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  kernels::Exec exec() const { return exec_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Tensor<T> v) { return push(std::move(v), nullptr, false, {}); }

  Var<T> leaf(Tensor<T> v, bool requires_grad = true) {
    return push(std::move(v), nullptr, requires_grad && record_, {});
  }

  /// Non-owning leaf over an external tensor (parameters).
  Var<T> view(const Tensor<T>& v, bool requires_grad = true) {
    Node n;
    n.external = &v;
    n.requires_grad = requires_grad && record_;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Appends an op result. The backward closure is kept only when some input
  /// needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward fn, const char* op) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()), std::move(fn), op);
  }

  Var<T> record(Tensor<T> value, std::span<const Var<T>> inputs, Backward fn, const char* op) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
    bool needs = false;
    if (record_)
      for (const auto& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs ? std::move(fn) : nullptr, needs, op);
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient accumulator, zero-filled on first use.
  Tensor<T>& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
  }

  /// nullptr when nothing flowed into the node.
  const Tensor<T>* grad(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.grad.empty() ? nullptr : &n.grad;
  }

  Tensor<T> grad_or_zero(Var<T> v) const {
    const Tensor<T>* g = grad(v.id);
    return g ? *g : Tensor<T>(value(v.id).shape());
  }

  /// Seeds d(loss)/d(loss) = 1 and replays the tape backward.
  void backward(Var<T> loss) {
    if (value(loss.id).size() != 1)
      throw ShapeError("backward needs a single-element loss, got " + shape_str(value(loss.id).shape()));
    if (!nodes_[loss.id].requires_grad) return;
    grad_buffer(loss.id).fill(T(1));
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.empty()) continue;
      if (trace_) trace_->push_back(id);
      n.backward(*this, id);
    }
  }

  /// Records the ids visited by backward(), for tests.
  void set_trace(std::vector<std::size_t>* trace) { trace_ = trace; }

  const char* op_name(std::size_t id) const { return nodes_[id].op; }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    Backward backward;
    bool requires_grad = false;
    const char* op = "leaf";
  };

  Var<T> push(Tensor<T> v, Backward fn, bool requires_grad, const char* op) {
    Node n;
    n.value = std::move(v);
    n.backward = std::move(fn);
    n.requires_grad = requires_grad;
    if (op) n.op = op;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  bool record_;
  kernels::Exec exec_;
  std::deque<Node> nodes_;  // stable addresses: value() references survive later pushes
  std::vector<std::size_t>* trace_ = nullptr;
};

}  // namespace nrel
