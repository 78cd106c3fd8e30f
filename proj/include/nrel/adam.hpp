#pragma once

#include <cmath>

#include "nrel/params.hpp"

namespace nrel {

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments per parameter entry and the shared step counter.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::size_t step = 0;

  explicit AdamState(const ParamSet<T>& p) {
    for (const auto& e : p.entries()) {
      m.push_back(e.frozen ? Tensor<T>() : Tensor<T>(e.value.shape()));
      v.push_back(e.frozen ? Tensor<T>() : Tensor<T>(e.value.shape()));
    }
  }
};

/// Bias-corrected Adam update. Frozen entries keep their values and moments.
template <typename T>
void adam_step(ParamSet<T>& params, const Gradients<T>& grads, AdamState<T>& state, const AdamOptions& opt) {
  if (grads.values.size() != params.size() || state.m.size() != params.size())
    throw ShapeError("adam_step: gradient/state count does not match the parameter set");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.entry(i);
    const auto& g = grads.values[i];
    if (e.frozen) continue;
    if (g.shape() != e.value.shape())
      throw ShapeError("adam_step: gradient " + shape_str(g.shape()) + " for " + e.name + " " +
                       shape_str(e.value.shape()));
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<T>(opt.beta1 * m[k] + (1.0 - opt.beta1) * gk);
      v[k] = static_cast<T>(opt.beta2 * v[k] + (1.0 - opt.beta2) * gk * gk);
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      e.value[k] = static_cast<T>(e.value[k] - opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
    }
  }
}

/// Rescales grads so their global L2 norm is at most max_norm. Returns the norm before clipping.
template <typename T>
double clip_global_norm(Gradients<T>& grads, const ParamSet<T>& params, double max_norm) {
  double sq = 0;
  for (std::size_t i = 0; i < grads.values.size(); ++i) {
    if (params.entry(i).frozen) continue;
    for (T g : grads.values[i].values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) grads.scale(static_cast<T>(max_norm / norm));
  return norm;
}

}  // namespace nrel
