#pragma once

// Graph-state LSTM. Every token keeps a hidden/cell state; one transition step
// updates all of them at once from the previous step's states of their
// incoming and outgoing neighbors. Within a step each node's row is computed
// independently from the previous state (double buffering), so the row-parallel
// kernels give the same bits as the serial ones.

#include <string>
#include <vector>

#include "nrel/edge_input.hpp"

namespace nrel {

enum class GrnMask { all, forward_only, backward_only, concat };

struct GrnConfig {
  std::size_t hidden = 150;
  std::size_t word_dim = 100;
  std::size_t edge_dim = 3;
  std::size_t steps = 5;
  ad::Activation candidate = ad::Activation::sigmoid;
};

template <typename T>
struct GraphState {
  std::size_t step = 0;
  Var<T> h;  // |V| x d_h
  Var<T> c;
};

/// W1/b1 plus, per gate x in {i,o,f,u}: W_x and Wh_x over incoming/outgoing edge
/// inputs, U_x and Uh_x over incoming/outgoing neighbor states, b_x.
template <typename T>
void init_grn_params(ParamSet<T>& params, const std::string& prefix, const GrnConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.hidden;
  params.add(prefix + "W1", glorot_uniform<T>(d, cfg.edge_dim + cfg.word_dim, rng));
  params.add(prefix + "b1", Tensor<T>({d}));
  for (const char* g : {"i", "o", "f", "u"}) {
    params.add(prefix + "W_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "Wh_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "U_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "Uh_" + g, glorot_uniform<T>(d, d, rng));
    params.add(prefix + "b_" + g, Tensor<T>({d}));
  }
}

/// One encoding of one graph. Edge inputs and the input-side gate terms are
/// step-invariant and computed once in the constructor; a dropout mask on the
/// edge inputs is therefore shared by all steps.
template <typename T>
class GrnRun {
 public:
  GrnRun(ParamBinder<T>& p, const DocumentGraph& g, const EncoderInput<T>& in, std::string prefix,
         const GrnConfig& cfg, const DropoutCtx& drop = {})
      : p_(p), g_(g), prefix_(std::move(prefix)), cfg_(cfg) {
    auto& tape = p.tape();
    const std::size_t d = cfg.hidden;
    const auto& agg = g.aggregation();
    Var<T> x = edge_inputs(g, in, p(prefix_ + "W1"), p(prefix_ + "b1"));
    if (x.valid() && drop.active()) x = ad::dropout(x, drop.rate, *drop.rng, true);
    x_in_ = neighbor_sum(tape, x, agg.in_edges, d);
    x_out_ = neighbor_sum(tape, x, agg.out_edges, d);

    const std::initializer_list<const char*> gates{"i", "o", "f", "u"};
    Var<T> w = stack_gate_weights(p, prefix_, "W", gates);
    Var<T> wh = stack_gate_weights(p, prefix_, "Wh", gates);
    Var<T> b = ad::concat<T>({p(prefix_ + "b_i"), p(prefix_ + "b_o"), p(prefix_ + "b_f"), p(prefix_ + "b_u")}, 0);
    input_pre_ = ad::add_bias(ad::add(ad::matmul_nt(x_in_, w), ad::matmul_nt(x_out_, wh)), b);
    u_ = stack_gate_weights(p, prefix_, "U", gates);
    uh_ = stack_gate_weights(p, prefix_, "Uh", gates);
  }

  /// Summed incoming / outgoing edge inputs per node.
  Var<T> x_in() const { return x_in_; }
  Var<T> x_out() const { return x_out_; }

  /// g_0: all-zero hidden and cell states.
  GraphState<T> initial_state() const {
    auto& tape = p_.tape();
    const Shape s{g_.num_tokens(), cfg_.hidden};
    return {0, tape.constant(Tensor<T>(s)), tape.constant(Tensor<T>(s))};
  }

  /// g_{t-1} -> g_t. Every read comes from prev.
  GraphState<T> transition_step(const GraphState<T>& prev, std::vector<Tensor<T>>* gate_log = nullptr) {
    auto& tape = p_.tape();
    const std::size_t d = cfg_.hidden;
    const auto& agg = g_.aggregation();
    Var<T> h_in = neighbor_sum(tape, prev.h, agg.in_nodes, d);
    Var<T> h_out = neighbor_sum(tape, prev.h, agg.out_nodes, d);
    Var<T> pre = ad::add(ad::add(input_pre_, ad::matmul_nt(h_in, u_)), ad::matmul_nt(h_out, uh_));
    Var<T> ig = ad::sigmoid(ad::slice_cols(pre, 0, d));
    Var<T> og = ad::sigmoid(ad::slice_cols(pre, d, d));
    Var<T> fg = ad::sigmoid(ad::slice_cols(pre, 2 * d, d));
    Var<T> ug = ad::activate(ad::slice_cols(pre, 3 * d, d), cfg_.candidate);
    if (gate_log)
      for (const auto& v : {ig, og, fg}) gate_log->push_back(v.value());
    Var<T> c = ad::add(ad::mul(fg, prev.c), ad::mul(ig, ug));
    Var<T> h = ad::mul(og, ad::tanh(c));
    stats_.cell_evaluations += g_.num_tokens();
    stats_.critical_path += 1;
    return {prev.step + 1, h, c};
  }

  GraphState<T> encode(std::size_t steps) {
    auto s = initial_state();
    for (std::size_t t = 0; t < steps; ++t) s = transition_step(s);
    return s;
  }

  const EncodeStats& stats() const { return stats_; }

 private:
  ParamBinder<T>& p_;
  const DocumentGraph& g_;
  std::string prefix_;
  GrnConfig cfg_;
  Var<T> x_in_, x_out_, input_pre_, u_, uh_;
  EncodeStats stats_;
};

template <typename T>
GraphState<T> grn_encode(ParamBinder<T>& p, const DocumentGraph& g, const EncoderInput<T>& in, const GrnConfig& cfg,
                         std::size_t steps, const DropoutCtx& drop = {}, EncodeStats* stats = nullptr,
                         const std::string& prefix = "grn.") {
  GrnRun<T> run(p, g, in, prefix, cfg, drop);
  auto s = run.encode(steps);
  if (stats) {
    stats->cell_evaluations += run.stats().cell_evaluations;
    stats->critical_path += run.stats().critical_path;
  }
  return s;
}

/// Hidden states under a direction mask: the full graph, one split component,
/// or both components with separate parameters ("grn.fwd."/"grn.bwd.") and
/// their final states concatenated per node.
template <typename T>
Var<T> grn_encode_masked(ParamBinder<T>& p, const DocumentGraph& g, const EncoderInput<T>& in, const GrnConfig& cfg,
                         std::size_t steps, GrnMask mask, const DropoutCtx& drop = {}, EncodeStats* stats = nullptr) {
  switch (mask) {
    case GrnMask::all: return grn_encode(p, g, in, cfg, steps, drop, stats).h;
    case GrnMask::forward_only: return grn_encode(p, split_dags(g).forward, in, cfg, steps, drop, stats).h;
    case GrnMask::backward_only: return grn_encode(p, split_dags(g).backward, in, cfg, steps, drop, stats).h;
    case GrnMask::concat: {
      const auto split = split_dags(g);
      auto f = grn_encode(p, split.forward, in, cfg, steps, drop, stats, "grn.fwd.");
      auto b = grn_encode(p, split.backward, in, cfg, steps, drop, stats, "grn.bwd.");
      return ad::concat<T>({f.h, b.h}, 1);
    }
  }
  throw std::invalid_argument("unknown GRN mask");
}

}  // namespace nrel
