#pragma once

// Generated graphs and datasets for tests, acceptance checks and benchmarks.

#include <string>
#include <vector>

#include "nrel/dataset.hpp"
#include "nrel/embeddings.hpp"
#include "nrel/rng.hpp"

namespace nrel {

inline constexpr const char* kKeyLabel = "key";

/// Random trees where two mentions are joined by a path of `path_hops` edges.
/// "Yes" iff the key label sits on that path; no other edge ever carries it.
/// With path_hops == 2 either path edge may hold the key; otherwise only the
/// middle edge can, so the evidence is path_hops / 2 hops from both mentions.
struct HopTaskOptions {
  std::size_t min_tokens = 6;
  std::size_t max_tokens = 12;
  std::size_t path_hops = 2;
  std::size_t vocab = 20;
  std::size_t distractor_labels = 4;
  double yes_rate = 0.5;
};

/// None / rel; gold is "rel" for positive instances.
RelationSchema hop_task_schema();

/// Graphs hold the tree edges only.
std::vector<Instance> make_hop_task(std::size_t count, const HopTaskOptions& opt, Rng& rng);

/// The same trees as instance-file records: tree edges become arcs, so a graph
/// built from them also carries adjacency edges.
std::vector<RawInstance> make_hop_task_raw(std::size_t count, const HopTaskOptions& opt, Rng& rng);

/// Words "w0".."w{n-1}" with uniform(-1, 1) vectors and a mean unknown row.
WordEmbeddingTable make_random_vectors(std::size_t vocab, std::size_t dim, Rng& rng);

/// Single-sentence chains: adjacency edges only, mentions on the first and last token.
std::vector<Instance> make_chain_instances(std::size_t count, std::size_t tokens, std::size_t vocab, Rng& rng);

/// Random graph with n tokens and roughly `edges` labeled edges (no self-loops,
/// arbitrary direction, cycles allowed), labels drawn from `labels`.
DocumentGraph make_random_graph(std::size_t n, std::size_t edges, const std::vector<std::string>& labels,
                                std::size_t vocab, Rng& rng);

}  // namespace nrel
