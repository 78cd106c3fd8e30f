#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrel/kernels.hpp"

namespace nrel {

/// Malformed graph input: dangling indices, self-loops, cycles where a DAG is required.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EdgeKind { dependency, adjacency, discourse };

inline constexpr const char* kNextTok = "next_tok";
inline constexpr const char* kPrevTok = "prev_tok";
inline constexpr const char* kNextSent = "next_sent";

struct Token {
  std::size_t index = 0;
  std::string surface;
  std::size_t sentence = 0;
};

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string label;
  EdgeKind kind = EdgeKind::dependency;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Tokens plus labeled directed edges. Edge order is canonical: every
/// neighbor sum runs over it in list order.
class DocumentGraph {
 public:
  DocumentGraph() = default;
  /// Validates indices, rejects self-loops, drops duplicate (source, target, label) triples.
  DocumentGraph(std::vector<Token> tokens, std::vector<Edge> edges);

  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_tokens() const { return tokens_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_sentences() const { return tokens_.empty() ? 0 : tokens_.back().sentence + 1; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  /// Edge ids entering / leaving token j, in edge-list order.
  const std::vector<std::size_t>& in_edges(std::size_t j) const { return in_adj_.at(j); }
  const std::vector<std::size_t>& out_edges(std::size_t j) const { return out_adj_.at(j); }

  /// Row groups for neighbor sums, built once per graph.
  struct Aggregation {
    std::shared_ptr<const kernels::Segments> in_edges;   // node j <- edge rows entering j
    std::shared_ptr<const kernels::Segments> out_edges;  // node j <- edge rows leaving j
    std::shared_ptr<const kernels::Segments> in_nodes;   // node j <- source rows of entering edges
    std::shared_ptr<const kernels::Segments> out_nodes;  // node j <- target rows of leaving edges
  };
  const Aggregation& aggregation() const;

  /// Graph with only the edges for which keep(edge) holds; tokens unchanged.
  template <typename Pred>
  DocumentGraph filter_edges(Pred keep) const {
    std::vector<Edge> kept;
    for (const auto& e : edges_)
      if (keep(e)) kept.push_back(e);
    return DocumentGraph(tokens_, std::move(kept));
  }

  /// Same graph with token ids relabelled by perm (new id = perm[old id]).
  /// Sentence ids are dropped to 0 since the order no longer holds.
  DocumentGraph permuted(const std::vector<std::size_t>& perm) const;

 private:
  std::vector<Token> tokens_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_adj_;
  std::vector<std::vector<std::size_t>> out_adj_;
  std::size_t duplicates_dropped_ = 0;
  mutable std::shared_ptr<const Aggregation> aggregation_;
};

/// Dependency arc inside one sentence, sentence-local indices.
struct Arc {
  std::size_t head = 0;
  std::size_t dep = 0;
  std::string label;
};

struct SentenceInput {
  std::vector<std::string> tokens;
  std::vector<Arc> arcs;
  std::size_t root = 0;
};

/// Dependency arcs, next_tok/prev_tok adjacency pairs within each sentence,
/// and one next_sent edge from each sentence root to the following root.
DocumentGraph build_graph(const std::vector<SentenceInput>& sentences);

struct SplitDags {
  DocumentGraph forward;   // edges with source < target
  DocumentGraph backward;  // edges with source > target
};

SplitDags split_dags(const DocumentGraph& g);

/// Kahn's algorithm, smallest ready index first. Throws GraphError on a cycle.
std::vector<std::size_t> topological_order(const DocumentGraph& g);
bool is_acyclic(const DocumentGraph& g);

/// Tokens within `hops` edges of j. Undirected mode ignores direction;
/// directed mode follows edges backward from j, i.e. the tokens that can reach j.
std::set<std::size_t> reachable_within(const DocumentGraph& g, std::size_t j, std::size_t hops, bool directed);

/// Undirected hop distances from j; unreachable tokens get SIZE_MAX.
std::vector<std::size_t> undirected_distances(const DocumentGraph& g, std::size_t j);

}  // namespace nrel
