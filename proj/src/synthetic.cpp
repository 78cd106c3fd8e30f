#include "nrel/synthetic.hpp"

#include <algorithm>
#include <numeric>

namespace nrel {

namespace {

struct HopSample {
  std::vector<std::string> words;
  std::vector<Edge> edges;
  std::size_t e1 = 0, e2 = 0;
  bool yes = false;
};

std::string word_name(std::size_t i) { return "w" + std::to_string(i); }

HopSample sample_hop(const HopTaskOptions& opt, Rng& rng) {
  if (opt.path_hops < 1) throw std::invalid_argument("hop task needs path_hops >= 1");
  if (opt.min_tokens < opt.path_hops + 1 || opt.max_tokens < opt.min_tokens)
    throw std::invalid_argument("hop task token range too small for the path");
  const std::size_t n = opt.min_tokens + rng.below(opt.max_tokens - opt.min_tokens + 1);

  // Token positions are shuffled so the path is not tied to index order.
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), 0);
  rng.shuffle(pos.begin(), pos.end());

  HopSample s;
  s.yes = rng.bernoulli(opt.yes_rate);
  const std::size_t key_edge = opt.path_hops == 2 ? rng.below(2) : (opt.path_hops - 1) / 2;
  auto filler = [&] { return "l" + std::to_string(rng.below(opt.distractor_labels)); };
  auto connect = [&](std::size_t a, std::size_t b, std::string label) {
    if (rng.bernoulli(0.5)) std::swap(a, b);
    s.edges.push_back({pos[a], pos[b], std::move(label), EdgeKind::dependency});
  };

  for (std::size_t k = 0; k < opt.path_hops; ++k)
    connect(k, k + 1, s.yes && k == key_edge ? std::string(kKeyLabel) : filler());
  for (std::size_t v = opt.path_hops + 1; v < n; ++v) connect(rng.below(v), v, filler());

  s.e1 = pos[0];
  s.e2 = pos[opt.path_hops];
  s.words.resize(n);
  for (auto& w : s.words) w = word_name(rng.below(opt.vocab));
  return s;
}

}  // namespace

RelationSchema hop_task_schema() { return RelationSchema({kNoneLabel, "rel"}); }

std::vector<Instance> make_hop_task(std::size_t count, const HopTaskOptions& opt, Rng& rng) {
  const auto schema = hop_task_schema();
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto s = sample_hop(opt, rng);
    std::vector<Token> tokens;
    for (std::size_t t = 0; t < s.words.size(); ++t) tokens.push_back({t, s.words[t], 0});
    Instance x{DocumentGraph(std::move(tokens), std::move(s.edges)), {{1, {s.e1}}, {2, {s.e2}}},
               schema.index_of(s.yes ? "rel" : kNoneLabel)};
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<RawInstance> make_hop_task_raw(std::size_t count, const HopTaskOptions& opt, Rng& rng) {
  std::vector<RawInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto s = sample_hop(opt, rng);
    SentenceInput sent{s.words, {}, s.e1};
    for (const auto& e : s.edges) sent.arcs.push_back({e.source, e.target, e.label});
    RawInstance r;
    r.sentences.push_back(std::move(sent));
    r.entities = {{1, 0, s.e1, s.e1}, {2, 0, s.e2, s.e2}};
    r.label = s.yes ? "rel" : kNoneLabel;
    out.push_back(std::move(r));
  }
  return out;
}

WordEmbeddingTable make_random_vectors(std::size_t vocab, std::size_t dim, Rng& rng) {
  WordEmbeddingTable t;
  for (std::size_t i = 0; i < vocab; ++i) t.vocab.add(word_name(i));
  t.matrix = Tensor<double>({t.vocab.size(), dim});
  for (std::size_t r = 1; r < t.vocab.size(); ++r)
    for (auto& v : t.matrix.row(r)) v = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 1; r < t.vocab.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) t.matrix(0, c) += t.matrix(r, c) / static_cast<double>(vocab);
  return t;
}

std::vector<Instance> make_chain_instances(std::size_t count, std::size_t tokens, std::size_t vocab, Rng& rng) {
  if (tokens < 2) throw std::invalid_argument("chain needs at least two tokens");
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SentenceInput s;
    for (std::size_t t = 0; t < tokens; ++t) s.tokens.push_back(word_name(rng.below(vocab)));
    out.push_back({build_graph({s}), {{1, {0}}, {2, {tokens - 1}}}, std::nullopt});
  }
  return out;
}

DocumentGraph make_random_graph(std::size_t n, std::size_t edges, const std::vector<std::string>& labels,
                                std::size_t vocab, Rng& rng) {
  if (n < 2) throw std::invalid_argument("random graph needs at least two tokens");
  std::vector<Token> tokens;
  for (std::size_t t = 0; t < n; ++t) tokens.push_back({t, word_name(rng.below(vocab)), 0});
  std::vector<Edge> es;
  for (std::size_t k = 0; k < edges; ++k) {
    const std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    es.push_back({a, b, labels[rng.below(labels.size())], EdgeKind::dependency});
  }
  std::vector<Edge> unique;
  for (const auto& e : es)
    if (std::find(unique.begin(), unique.end(), e) == unique.end()) unique.push_back(e);
  return DocumentGraph(std::move(tokens), std::move(unique));
}

}  // namespace nrel
