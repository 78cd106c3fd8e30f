#pragma once

#include <string>
#include <vector>

#include "nrel/dataset.hpp"
#include "nrel/edge_input.hpp"

namespace nrel {

/// How a multi-token mention becomes one vector.
enum class Pooling { mean, first, last };

template <typename T>
void init_classifier_params(ParamSet<T>& params, std::size_t classes, std::size_t mentions, std::size_t state_dim,
                            Rng& rng) {
  params.add("cls.W0", glorot_uniform<T>(classes, mentions * state_dim, rng));
  params.add("cls.b0", Tensor<T>({classes}));
}

/// h for one entity mention, 1 x d.
template <typename T>
Var<T> mention_state(Var<T> states, const EntityMention& m, Pooling pooling = Pooling::mean) {
  if (m.tokens.empty()) throw std::invalid_argument("mention_state: empty span for slot " + std::to_string(m.slot));
  switch (pooling) {
    case Pooling::mean: return ad::mean_rows(states, m.tokens);
    case Pooling::first: return ad::row(states, m.tokens.front());
    case Pooling::last: return ad::row(states, m.tokens.back());
  }
  throw std::invalid_argument("unknown pooling");
}

/// Logits W0 [h_1; ...; h_N] + b0 as a 1 x L row; dropout hits the concatenation.
template <typename T>
Var<T> classifier_logits(ParamBinder<T>& p, const std::vector<Var<T>>& mention_states, const DropoutCtx& drop = {}) {
  Var<T> z = ad::concat(mention_states, 1);
  const auto& w0 = p.params().get("cls.W0");
  if (z.value().cols() != w0.cols())
    throw ShapeError("classifier: mention features " + shape_str(z.shape()) + " do not match W0 " +
                     shape_str(w0.shape()));
  if (drop.active()) z = ad::dropout(z, drop.rate, *drop.rng, true);
  return ad::add_bias(ad::matmul_nt(z, p("cls.W0")), p("cls.b0"));
}

/// Softmax over the classifier logits.
template <typename T>
std::vector<T> predict_probs(ParamBinder<T>& p, const std::vector<Var<T>>& mention_states) {
  return ad::softmax<T>(classifier_logits(p, mention_states).value().values());
}

inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace nrel
