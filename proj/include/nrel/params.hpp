#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nrel/rng.hpp"
#include "nrel/tape.hpp"
#include "nrel/tensor.hpp"

namespace nrel {

/// Named parameter tensors in insertion order. Frozen entries are skipped by
/// gradient accumulation and the optimizer.
template <typename T>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    bool frozen = false;
  };

  Tensor<T>& add(std::string name, Tensor<T> value, bool frozen = false) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value), frozen});
    return entries_.back().value;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
  }

  Tensor<T>& get(const std::string& name) { return entries_[index_of(name)].value; }
  const Tensor<T>& get(const std::string& name) const { return entries_[index_of(name)].value; }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>(), e.frozen);
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-entry gradient accumulators aligned with a ParamSet. Frozen entries get
/// an empty placeholder, so a large frozen table costs nothing.
template <typename T>
struct Gradients {
  std::vector<Tensor<T>> values;

  explicit Gradients(const ParamSet<T>& p) {
    for (const auto& e : p.entries()) values.push_back(e.frozen ? Tensor<T>() : Tensor<T>(e.value.shape()));
  }

  void zero() {
    for (auto& v : values) v.fill(T(0));
  }

  void scale(T s) {
    for (auto& v : values)
      for (auto& x : v.storage()) x *= s;
  }
};

/// Binds parameters to a tape on first use, so an encoder only pays for the
/// tensors it touches.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Tape<T>& tape, const ParamSet<T>& params) : tape_(tape), params_(params), vars_(params.size()) {}

  Var<T> operator()(const std::string& name) {
    const std::size_t i = params_.index_of(name);
    if (!vars_[i]) vars_[i] = tape_.view(params_.entry(i).value, true);
    return *vars_[i];
  }

  Tape<T>& tape() { return tape_; }
  const ParamSet<T>& params() const { return params_; }

  /// Adds tape gradients of every bound parameter into grads.
  void accumulate_into(Gradients<T>& grads) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (!vars_[i]) continue;
      const Tensor<T>* g = tape_.grad(vars_[i]->id);
      auto& dst = grads.values[i];
      if (!g || dst.empty()) continue;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += (*g)[k];
    }
  }

 private:
  Tape<T>& tape_;
  const ParamSet<T>& params_;
  std::vector<std::optional<Var<T>>> vars_;
};

/// Variance-preserving uniform init, bound sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_out, std::size_t fan_in, Rng& rng) {
  Tensor<T> w({fan_out, fan_in});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
  return w;
}

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double lo, double hi, Rng& rng) {
  Tensor<T> w(std::move(shape));
  for (auto& v : w.storage()) v = static_cast<T>(rng.uniform(lo, hi));
  return w;
}

}  // namespace nrel
