#pragma once

// Bidirectional DAG LSTM baseline. The document graph is split into its
// left-to-right and right-to-left edges; each half is encoded node by node in
// topological order, and the two hidden states of every token are concatenated.

#include <string>
#include <vector>

#include "nrel/edge_input.hpp"

namespace nrel {

struct DagConfig {
  std::size_t hidden = 150;
  std::size_t word_dim = 100;
  std::size_t edge_dim = 3;
  ad::Activation candidate = ad::Activation::sigmoid;
};

template <typename T>
struct NodeStates {
  Var<T> h;  // |V| x d_h
  Var<T> c;
};

/// Parameters of one direction under prefix, e.g. "dag.fwd.".
template <typename T>
void init_dag_params(ParamSet<T>& params, const std::string& prefix, const DagConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.hidden;
  params.add(prefix + "W1", glorot_uniform<T>(d, cfg.edge_dim + cfg.word_dim, rng));
  params.add(prefix + "b1", Tensor<T>({d}));
  for (const char* g : {"i", "o", "f", "u"}) {
    params.add(prefix + "W_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "U_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "b_" + g, Tensor<T>({d}));
  }
}

/// One DAG direction. Node j reads the summed edge inputs and summed states of
/// its predecessors; each incoming edge has its own forget gate.
template <typename T>
NodeStates<T> encode_dag(ParamBinder<T>& p, const DocumentGraph& dag, const EncoderInput<T>& in,
                         const std::string& prefix, const DagConfig& cfg, const DropoutCtx& drop = {},
                         EncodeStats* stats = nullptr, std::vector<Tensor<T>>* gate_log = nullptr) {
  auto& tape = p.tape();
  const std::size_t d = cfg.hidden;
  const std::size_t n = dag.num_tokens();
  const auto order = topological_order(dag);
  const auto& agg = dag.aggregation();

  Var<T> x = edge_inputs(dag, in, p(prefix + "W1"), p(prefix + "b1"));
  if (x.valid() && drop.active()) x = ad::dropout(x, drop.rate, *drop.rng, true);
  Var<T> x_in = neighbor_sum(tape, x, agg.in_edges, d);

  // Input-side gate terms depend only on edge inputs, so they are computed for
  // every node up front; only the state-side terms follow the DAG order.
  Var<T> w_iou = stack_gate_weights(p, prefix, "W", {"i", "o", "u"});
  Var<T> u_iou = stack_gate_weights(p, prefix, "U", {"i", "o", "u"});
  Var<T> b_iou = ad::concat<T>({p(prefix + "b_i"), p(prefix + "b_o"), p(prefix + "b_u")}, 0);
  Var<T> node_pre = ad::add_bias(ad::matmul_nt(x_in, w_iou), b_iou);
  Var<T> edge_forget_pre;
  if (x.valid()) edge_forget_pre = ad::add_bias(ad::matmul_nt(x, p(prefix + "W_f")), p(prefix + "b_f"));
  Var<T> u_f = p(prefix + "U_f");

  std::vector<Var<T>> h(n), c(n);
  std::vector<bool> done(n, false);
  for (std::size_t j : order) {
    const auto& incoming = dag.in_edges(j);
    Var<T> pre = ad::row(node_pre, j);
    if (!incoming.empty()) {
      std::vector<Var<T>> hs;
      for (std::size_t e : incoming) {
        const std::size_t src = dag.edges()[e].source;
        if (!done[src]) throw GraphError("encode_dag: predecessor " + std::to_string(src) + " of " + std::to_string(j) + " not yet computed");
        hs.push_back(h[src]);
      }
      Var<T> h_in = ad::sum_vectors(tape, hs, Shape{1, d});
      pre = ad::add(pre, ad::matmul_nt(h_in, u_iou));
    }
    Var<T> ig = ad::sigmoid(ad::slice_cols(pre, 0, d));
    Var<T> og = ad::sigmoid(ad::slice_cols(pre, d, d));
    Var<T> ug = ad::activate(ad::slice_cols(pre, 2 * d, d), cfg.candidate);
    std::vector<Var<T>> terms{ad::mul(ig, ug)};
    if (gate_log) {
      gate_log->push_back(ig.value());
      gate_log->push_back(og.value());
    }
    for (std::size_t e : incoming) {
      const std::size_t src = dag.edges()[e].source;
      Var<T> fg = ad::sigmoid(ad::add(ad::row(edge_forget_pre, e), ad::matmul_nt(h[src], u_f)));
      if (gate_log) gate_log->push_back(fg.value());
      terms.push_back(ad::mul(fg, c[src]));
    }
    c[j] = ad::sum_vectors(tape, terms, Shape{1, d});
    h[j] = ad::mul(og, ad::tanh(c[j]));
    done[j] = true;
  }
  if (stats) {
    stats->cell_evaluations += n;
    stats->critical_path += n;
  }
  return {ad::concat(h, 0), ad::concat(c, 0)};
}

/// [h_forward; h_backward] per token, |V| x 2 d_h.
template <typename T>
Var<T> encode_bidirectional(ParamBinder<T>& p, const DocumentGraph& g, const EncoderInput<T>& in,
                            const DagConfig& cfg, const DropoutCtx& drop = {}, EncodeStats* stats = nullptr) {
  const auto split = split_dags(g);
  auto fwd = encode_dag(p, split.forward, in, "dag.fwd.", cfg, drop, stats);
  auto bwd = encode_dag(p, split.backward, in, "dag.bwd.", cfg, drop, stats);
  if (stats) stats->critical_path -= g.num_tokens();  // the two directions are independent
  return ad::concat<T>({fwd.h, bwd.h}, 1);
}

}  // namespace nrel
