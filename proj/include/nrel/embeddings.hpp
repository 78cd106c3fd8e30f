#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nrel/rng.hpp"
#include "nrel/tensor.hpp"

namespace nrel {

/// Word to dense id. Id 0 is always the unknown-word entry.
class Vocabulary {
 public:
  static constexpr const char* kUnk = "<unk>";
  static constexpr std::size_t kUnkId = 0;

  Vocabulary() { add(kUnk); }

  /// Returns the existing id when the word is already present.
  std::size_t add(const std::string& word);
  std::size_t id(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct WordEmbeddingTable {
  Vocabulary vocab;
  Tensor<double> matrix;  // |vocab| x d_w
  bool frozen = true;

  std::size_t dim() const { return matrix.cols(); }
  std::span<const double> lookup(const std::string& word) const { return matrix.row(vocab.id(word)); }
};

/// Reads "word v1 ... vd" lines. The dimension comes from the first entry; a
/// leading "count dim" header line is skipped. The unknown-word row is the
/// mean of all loaded rows. vocab_limit 0 means no limit.
WordEmbeddingTable load_word_vectors(const std::string& path, std::size_t vocab_limit = 0);

/// Writes every row except the unknown-word row, shortest round-trip decimals.
void save_word_vectors(const std::string& path, const WordEmbeddingTable& table);

/// Trainable edge-label embeddings.
class EdgeLabelTable {
 public:
  EdgeLabelTable() = default;
  EdgeLabelTable(std::vector<std::string> labels, Tensor<double> matrix);

  std::size_t id(const std::string& label) const;
  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Tensor<double>& matrix() const { return matrix_; }
  Tensor<double>& matrix() { return matrix_; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
  Tensor<double> matrix_;
};

/// Rows drawn uniformly from [-range, range].
EdgeLabelTable init_edge_labels(const std::vector<std::string>& labels, std::size_t dim, Rng& rng,
                                double range = 0.1);

}  // namespace nrel
