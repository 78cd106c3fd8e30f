#pragma once

#include <string>
#include <vector>

#include "nrel/classifier.hpp"
#include "nrel/config.hpp"
#include "nrel/dag_encoder.hpp"
#include "nrel/dataset.hpp"
#include "nrel/embeddings.hpp"
#include "nrel/grn_encoder.hpp"

namespace nrel {

inline constexpr const char* kUnkLabel = "<unk>";

/// Edge labels seen in the data plus the structural ones, with the reserved
/// unknown label first.
std::vector<std::string> collect_edge_labels(std::span<const Instance> instances);

/// Encoder + classifier with everything needed to run it: config, schema,
/// vocabulary and edge-label names. emb.words is frozen; emb.labels trains.
template <typename T = double>
class RelationModel {
 public:
  RelationModel(TrainConfig cfg, RelationSchema schema, const WordEmbeddingTable& words,
                std::vector<std::string> edge_labels, std::size_t mentions)
      : cfg_(std::move(cfg)), schema_(std::move(schema)), vocab_(words.vocab), mentions_(mentions) {
    cfg_.validate();
    if (words.dim() != cfg_.word_dim)
      throw std::invalid_argument("word vectors have dimension " + std::to_string(words.dim()) + " but word_dim=" +
                                  std::to_string(cfg_.word_dim));
    if (mentions_ < 1) throw std::invalid_argument("model needs at least one entity mention");
    Rng rng(cfg_.seed);
    if (edge_labels.empty() || edge_labels.front() != kUnkLabel) edge_labels.insert(edge_labels.begin(), kUnkLabel);
    const auto labels = init_edge_labels(edge_labels, cfg_.edge_dim, rng, cfg_.edge_init_range);
    set_label_index(labels.labels());
    params_.add("emb.words", words.matrix.template cast<T>(), true);
    params_.add("emb.labels", labels.matrix().template cast<T>());
    if (cfg_.encoder == EncoderKind::dag) {
      init_dag_params(params_, "dag.fwd.", cfg_.dag(), rng);
      init_dag_params(params_, "dag.bwd.", cfg_.dag(), rng);
    } else if (cfg_.grn_mask == GrnMask::concat) {
      init_grn_params(params_, "grn.fwd.", cfg_.grn(), rng);
      init_grn_params(params_, "grn.bwd.", cfg_.grn(), rng);
    } else {
      init_grn_params(params_, "grn.", cfg_.grn(), rng);
    }
    init_classifier_params(params_, num_classes(), mentions_, cfg_.encoder_width(), rng);
  }

  /// Rebuilds a model around stored parameters.
  RelationModel(TrainConfig cfg, RelationSchema schema, Vocabulary vocab, std::vector<std::string> edge_labels,
                std::size_t mentions, ParamSet<T> params)
      : cfg_(std::move(cfg)),
        schema_(std::move(schema)),
        vocab_(std::move(vocab)),
        mentions_(mentions),
        params_(std::move(params)) {
    set_label_index(edge_labels);
    if (params_.get("emb.words").rows() != vocab_.size())
      throw ShapeError("emb.words rows do not match the vocabulary size");
    if (params_.get("emb.labels").rows() != labels_.size())
      throw ShapeError("emb.labels rows do not match the edge-label list");
  }

  const TrainConfig& config() const { return cfg_; }
  TrainConfig& config() { return cfg_; }
  const RelationSchema& schema() const { return schema_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& edge_labels() const { return labels_; }
  std::size_t mentions() const { return mentions_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  std::size_t num_classes() const { return cfg_.mode == TaskMode::binary ? 2 : schema_.size(); }
  const std::string& class_name(std::size_t c) const {
    return cfg_.mode == TaskMode::binary ? RelationSchema::binary_labels().at(c) : schema_.name(c);
  }

  /// Gold class of an instance in this model's label space.
  std::size_t target(const Instance& x) const {
    if (!x.gold) throw std::invalid_argument("instance has no gold label");
    return cfg_.mode == TaskMode::binary ? schema_.binarize(*x.gold) : *x.gold;
  }

  std::size_t label_id(const std::string& label) const {
    auto it = label_index_.find(label);
    return it == label_index_.end() ? 0 : it->second;
  }

  /// Token states, |V| x encoder_width.
  Var<T> encode(ParamBinder<T>& p, const DocumentGraph& g, const DropoutCtx& drop = {},
                EncodeStats* stats = nullptr) const {
    auto& tape = p.tape();
    const auto& table = params_.get("emb.words");
    Tensor<T> rows({g.num_tokens(), table.cols()});
    for (std::size_t i = 0; i < g.num_tokens(); ++i) {
      const auto src = table.row(vocab_.id(g.tokens()[i].surface));
      std::copy(src.begin(), src.end(), rows.row(i).begin());
    }
    EncoderInput<T> in{tape.constant(std::move(rows)), p("emb.labels"),
                       [this](const std::string& l) { return label_id(l); }};
    if (cfg_.encoder == EncoderKind::dag) return encode_bidirectional(p, g, in, cfg_.dag(), drop, stats);
    return grn_encode_masked(p, g, in, cfg_.grn(), cfg_.steps, cfg_.grn_mask, drop, stats);
  }

  Var<T> logits(ParamBinder<T>& p, const Instance& x, const DropoutCtx& drop = {},
                EncodeStats* stats = nullptr) const {
    if (x.mentions.size() != mentions_)
      throw std::invalid_argument("instance has " + std::to_string(x.mentions.size()) + " mentions, model expects " +
                                  std::to_string(mentions_));
    Var<T> states = encode(p, x.graph, drop, stats);
    std::vector<Var<T>> ms;
    for (const auto& m : x.mentions) ms.push_back(mention_state(states, m, cfg_.pooling));
    return classifier_logits(p, ms, drop);
  }

  /// Class probabilities with no tape recording.
  std::vector<double> predict(const Instance& x, EncodeStats* stats = nullptr) const {
    Tape<T> tape(false, kernels::Exec{cfg_.threads});
    ParamBinder<T> p(tape, params_);
    const auto probs = ad::softmax<T>(logits(p, x, {}, stats).value().values());
    return {probs.begin(), probs.end()};
  }

  /// Cross-entropy of one instance scaled by weight; gradients are added into grads.
  double accumulate_gradient(const Instance& x, Gradients<T>& grads, double weight, const DropoutCtx& drop) const {
    Tape<T> tape(true, kernels::Exec{cfg_.threads});
    ParamBinder<T> p(tape, params_);
    auto out = ad::softmax_cross_entropy(logits(p, x, drop), target(x));
    const double loss = static_cast<double>(out.loss.value()[0]);
    tape.backward(ad::scale(out.loss, static_cast<T>(weight)));
    p.accumulate_into(grads);
    return loss;
  }

  template <typename U>
  RelationModel<U> cast() const {
    return RelationModel<U>(cfg_, schema_, vocab_, labels_, mentions_, params_.template cast<U>());
  }

 private:
  void set_label_index(const std::vector<std::string>& labels) {
    labels_ = labels;
    label_index_.clear();
    for (std::size_t i = 0; i < labels_.size(); ++i) label_index_.emplace(labels_[i], i);
  }

  TrainConfig cfg_;
  RelationSchema schema_;
  Vocabulary vocab_;
  std::size_t mentions_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> label_index_;
  ParamSet<T> params_;
};

}  // namespace nrel
