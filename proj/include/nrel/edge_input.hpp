#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nrel/document_graph.hpp"
#include "nrel/ops.hpp"
#include "nrel/params.hpp"

namespace nrel {

/// Everything an encoder reads about one graph, already on the tape.
template <typename T>
struct EncoderInput {
  Var<T> words;                                        // |V| x d_w, one row per token
  Var<T> labels;                                       // edge-label table, |labels| x d_e
  std::function<std::size_t(const std::string&)> label_id;
};

/// Training-time dropout on edge inputs; rate 0 or training=false is a no-op.
struct DropoutCtx {
  double rate = 0.0;
  Rng* rng = nullptr;
  bool training = false;

  bool active() const { return training && rate > 0.0 && rng; }
};

/// Counters filled by the encoders; the benchmark reports them.
struct EncodeStats {
  std::size_t cell_evaluations = 0;  // node-state updates
  std::size_t critical_path = 0;     // sequential dependent steps
};

/// x = W1 [e_label; e_source] + b1 for a single edge, as a 1 x d_h row.
template <typename T>
Var<T> edge_input(const EncoderInput<T>& in, std::size_t source, std::size_t label_id, Var<T> w1, Var<T> b1) {
  if (label_id >= in.labels.value().rows())
    throw std::out_of_range("edge_input: label id " + std::to_string(label_id) + " with " +
                            std::to_string(in.labels.value().rows()) + " labels");
  auto z = ad::concat<T>({ad::row(in.labels, label_id), ad::row(in.words, source)}, 1);
  return ad::add_bias(ad::matmul_nt(z, w1), b1);
}

/// All edge inputs of g as an |E| x d_h matrix (label embedding first, then the
/// source-word embedding). Returns an invalid Var when g has no edges.
template <typename T>
Var<T> edge_inputs(const DocumentGraph& g, const EncoderInput<T>& in, Var<T> w1, Var<T> b1) {
  if (g.num_edges() == 0) return {};
  std::vector<std::size_t> label_ids, sources;
  label_ids.reserve(g.num_edges());
  sources.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    const std::size_t id = in.label_id(e.label);
    if (id >= in.labels.value().rows())
      throw std::out_of_range("edge_inputs: label id " + std::to_string(id) + " for '" + e.label + "'");
    label_ids.push_back(id);
    sources.push_back(e.source);
  }
  auto z = ad::concat<T>({ad::gather_rows(in.labels, std::move(label_ids)), ad::gather_rows(in.words, std::move(sources))}, 1);
  return ad::add_bias(ad::matmul_nt(z, w1), b1);
}

/// Ordered row sums of x over the given segments; zeros when x is empty.
template <typename T>
Var<T> neighbor_sum(Tape<T>& tape, Var<T> x, const std::shared_ptr<const kernels::Segments>& seg, std::size_t dim) {
  if (!x.valid()) return tape.constant(Tensor<T>({seg->num_segments(), dim}));
  return ad::segment_sum(x, seg);
}

template <typename T>
Var<T> stack_gate_weights(ParamBinder<T>& p, const std::string& prefix, const std::string& family,
                          std::initializer_list<const char*> gates) {
  std::vector<Var<T>> parts;
  for (const char* g : gates) parts.push_back(p(prefix + family + "_" + g));
  return ad::concat(parts, 0);
}

}  // namespace nrel
