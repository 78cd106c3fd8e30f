#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nrel/document_graph.hpp"

namespace nrel {

/// Malformed input file; the message names the file position.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kNoneLabel = "None";

/// r_1..r_L plus None. Binary mode groups every non-None label as "Yes".
class RelationSchema {
 public:
  RelationSchema() = default;
  explicit RelationSchema(std::vector<std::string> labels);
  static RelationSchema load(const std::string& path);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t none_index() const { return none_; }
  std::size_t index_of(const std::string& label) const;
  const std::string& name(std::size_t id) const { return labels_.at(id); }

  /// 0 = "No", 1 = "Yes".
  std::size_t binarize(std::size_t id) const { return id == none_ ? 0 : 1; }
  static const std::vector<std::string>& binary_labels();

 private:
  std::vector<std::string> labels_;
  std::size_t none_ = 0;
};

struct EntityMention {
  std::size_t slot = 1;               // 1-based argument position
  std::vector<std::size_t> tokens;    // document-level token ids
};

struct Instance {
  DocumentGraph graph;
  std::vector<EntityMention> mentions;  // ordered by slot
  std::optional<std::size_t> gold;      // schema index; empty when unlabeled
};

/// JSON-level record mirroring one line of an instance file.
struct RawEntity {
  std::size_t slot = 1;
  std::size_t sentence = 0;
  std::size_t first = 0;  // inclusive, sentence-local
  std::size_t last = 0;
};

struct RawInstance {
  std::vector<SentenceInput> sentences;
  std::vector<RawEntity> entities;
  std::optional<std::string> label;
};

RawInstance raw_from_json(const nlohmann::json& j);
nlohmann::json raw_to_json(const RawInstance& r);
Instance to_instance(const RawInstance& r, const RelationSchema& schema);

/// One JSON object per line. Errors name the line number.
std::vector<Instance> load_instances(const std::string& path, const RelationSchema& schema);
std::vector<RawInstance> load_raw(const std::string& path);
void save_raw(const std::string& path, std::span<const RawInstance> items);

struct DatasetStats {
  double avg_tokens = 0;
  double avg_sentences = 0;
  double cross_fraction = 0;  // share of instances with two or more sentences
};

DatasetStats dataset_stats(std::span<const Instance> instances);

}  // namespace nrel
