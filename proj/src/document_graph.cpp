#include "nrel/document_graph.hpp"

#include <deque>
#include <iostream>
#include <limits>
#include <queue>
#include <tuple>

namespace nrel {

DocumentGraph::DocumentGraph(std::vector<Token> tokens, std::vector<Edge> edges) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].index != i) throw GraphError("token indices must be dense, token " + std::to_string(i) +
                                                " has index " + std::to_string(tokens_[i].index));
    if (i > 0 && tokens_[i].sentence < tokens_[i - 1].sentence)
      throw GraphError("sentence ids must be non-decreasing at token " + std::to_string(i));
  }
  const std::size_t n = tokens_.size();
  in_adj_.resize(n);
  out_adj_.resize(n);
  std::set<std::tuple<std::size_t, std::size_t, std::string>> seen;
  for (auto& e : edges) {
    if (e.source >= n || e.target >= n)
      throw GraphError("edge (" + std::to_string(e.source) + "," + std::to_string(e.target) + "," + e.label +
                       ") references a token outside 0.." + std::to_string(n == 0 ? 0 : n - 1));
    if (e.source == e.target)
      throw GraphError("self-loop on token " + std::to_string(e.source) + " with label " + e.label);
    if (!seen.emplace(e.source, e.target, e.label).second) {
      ++duplicates_dropped_;
      continue;
    }
    const std::size_t id = edges_.size();
    in_adj_[e.target].push_back(id);
    out_adj_[e.source].push_back(id);
    edges_.push_back(std::move(e));
  }
  if (duplicates_dropped_ > 0)
    std::cerr << "warning: dropped " << duplicates_dropped_ << " duplicate edge(s)\n";
}

const DocumentGraph::Aggregation& DocumentGraph::aggregation() const {
  if (!aggregation_) {
    const std::size_t n = tokens_.size();
    std::vector<std::vector<std::size_t>> in_e(n), out_e(n), in_n(n), out_n(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t id : in_adj_[j]) {
        in_e[j].push_back(id);
        in_n[j].push_back(edges_[id].source);
      }
      for (std::size_t id : out_adj_[j]) {
        out_e[j].push_back(id);
        out_n[j].push_back(edges_[id].target);
      }
    }
    auto agg = std::make_shared<Aggregation>();
    agg->in_edges = std::make_shared<kernels::Segments>(kernels::Segments::from_lists(in_e, edges_.size()));
    agg->out_edges = std::make_shared<kernels::Segments>(kernels::Segments::from_lists(out_e, edges_.size()));
    agg->in_nodes = std::make_shared<kernels::Segments>(kernels::Segments::from_lists(in_n, n));
    agg->out_nodes = std::make_shared<kernels::Segments>(kernels::Segments::from_lists(out_n, n));
    aggregation_ = std::move(agg);
  }
  return *aggregation_;
}

DocumentGraph DocumentGraph::permuted(const std::vector<std::size_t>& perm) const {
  const std::size_t n = tokens_.size();
  if (perm.size() != n) throw GraphError("permutation size mismatch");
  std::vector<Token> toks(n);
  for (std::size_t i = 0; i < n; ++i) toks[perm[i]] = Token{perm[i], tokens_[i].surface, 0};
  std::vector<Edge> es;
  for (const auto& e : edges_) es.push_back({perm[e.source], perm[e.target], e.label, e.kind});
  return DocumentGraph(std::move(toks), std::move(es));
}

DocumentGraph build_graph(const std::vector<SentenceInput>& sentences) {
  std::vector<Token> tokens;
  std::vector<Edge> edges;
  std::vector<std::size_t> roots;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    const std::size_t len = sent.tokens.size();
    if (len == 0) throw GraphError("sentence " + std::to_string(s) + " is empty");
    if (sent.root >= len)
      throw GraphError("sentence " + std::to_string(s) + ": root " + std::to_string(sent.root) + " out of range");
    const std::size_t base = tokens.size();
    for (std::size_t i = 0; i < len; ++i) tokens.push_back({base + i, sent.tokens[i], s});
    for (const auto& a : sent.arcs) {
      if (a.head >= len || a.dep >= len)
        throw GraphError("sentence " + std::to_string(s) + ": arc " + std::to_string(a.head) + "->" +
                         std::to_string(a.dep) + " (" + a.label + ") dangles past " + std::to_string(len) +
                         " tokens");
      edges.push_back({base + a.head, base + a.dep, a.label, EdgeKind::dependency});
    }
    for (std::size_t i = 0; i + 1 < len; ++i) {
      edges.push_back({base + i, base + i + 1, kNextTok, EdgeKind::adjacency});
      edges.push_back({base + i + 1, base + i, kPrevTok, EdgeKind::adjacency});
    }
    roots.push_back(base + sent.root);
  }
  for (std::size_t s = 0; s + 1 < roots.size(); ++s)
    edges.push_back({roots[s], roots[s + 1], kNextSent, EdgeKind::discourse});
  return DocumentGraph(std::move(tokens), std::move(edges));
}

SplitDags split_dags(const DocumentGraph& g) {
  for (const auto& e : g.edges())
    if (e.source == e.target) throw GraphError("self-loop on token " + std::to_string(e.source));
  SplitDags out{g.filter_edges([](const Edge& e) { return e.source < e.target; }),
                g.filter_edges([](const Edge& e) { return e.source > e.target; })};
  topological_order(out.forward);
  topological_order(out.backward);
  return out;
}

std::vector<std::size_t> topological_order(const DocumentGraph& g) {
  const std::size_t n = g.num_tokens();
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : g.edges()) ++indegree[e.target];
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t id : g.out_edges(v))
      if (--indegree[g.edges()[id].target] == 0) ready.push(g.edges()[id].target);
  }
  if (order.size() != n) throw GraphError("cycle detected: " + std::to_string(n - order.size()) + " token(s) unordered");
  return order;
}

bool is_acyclic(const DocumentGraph& g) {
  try {
    topological_order(g);
    return true;
  } catch (const GraphError&) {
    return false;
  }
}

std::set<std::size_t> reachable_within(const DocumentGraph& g, std::size_t j, std::size_t hops, bool directed) {
  if (j >= g.num_tokens()) throw GraphError("token " + std::to_string(j) + " is not in the graph");
  std::vector<std::size_t> dist(g.num_tokens(), std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue{j};
  dist[j] = 0;
  std::set<std::size_t> out{j};
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    if (dist[v] == hops) continue;
    auto visit = [&](std::size_t u) {
      if (dist[u] != std::numeric_limits<std::size_t>::max()) return;
      dist[u] = dist[v] + 1;
      out.insert(u);
      queue.push_back(u);
    };
    for (std::size_t id : g.in_edges(v)) visit(g.edges()[id].source);
    if (!directed)
      for (std::size_t id : g.out_edges(v)) visit(g.edges()[id].target);
  }
  return out;
}

std::vector<std::size_t> undirected_distances(const DocumentGraph& g, std::size_t j) {
  const auto inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.num_tokens(), inf);
  std::deque<std::size_t> queue{j};
  dist.at(j) = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    auto visit = [&](std::size_t u) {
      if (dist[u] == inf) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    };
    for (std::size_t id : g.in_edges(v)) visit(g.edges()[id].source);
    for (std::size_t id : g.out_edges(v)) visit(g.edges()[id].target);
  }
  return dist;
}

}  // namespace nrel
