#include "nrel/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nrel/dataset.hpp"

namespace nrel {

std::size_t Vocabulary::add(const std::string& word) {
  auto [it, inserted] = index_.emplace(word, words_.size());
  if (inserted) words_.push_back(word);
  return it->second;
}

std::size_t Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnkId : it->second;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool is_integer(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

WordEmbeddingTable load_word_vectors(const std::string& path, std::size_t vocab_limit) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path);
  WordEmbeddingTable table;
  std::vector<double> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (dim == 0 && loaded == 0 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    if (fields.size() < 2) throw FormatError(path + ":" + std::to_string(lineno) + ": no vector values");
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) + " values, found " +
                        std::to_string(fields.size() - 1));
    const std::string word(fields[0]);
    if (table.vocab.contains(word)) continue;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v;
      if (!parse_double(fields[k], v))
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" + std::string(fields[k]) + "'");
      rows.push_back(v);
    }
    table.vocab.add(word);
    ++loaded;
    if (vocab_limit && loaded >= vocab_limit) break;
  }
  if (loaded == 0) throw FormatError("embedding file " + path + " has no entries");

  std::vector<double> values(dim, 0.0);  // unknown-word row
  for (std::size_t r = 0; r < loaded; ++r)
    for (std::size_t k = 0; k < dim; ++k) values[k] += rows[r * dim + k];
  for (auto& v : values) v /= static_cast<double>(loaded);
  values.insert(values.end(), rows.begin(), rows.end());
  table.matrix = Tensor<double>({loaded + 1, dim}, std::move(values));
  return table;
}

void save_word_vectors(const std::string& path, const WordEmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  char buf[64];
  for (std::size_t id = 0; id < table.vocab.size(); ++id) {
    if (id == Vocabulary::kUnkId) continue;
    out << table.vocab.word(id);
    for (double v : table.matrix.row(id)) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    }
    out << '\n';
  }
}

EdgeLabelTable::EdgeLabelTable(std::vector<std::string> labels, Tensor<double> matrix)
    : labels_(std::move(labels)), matrix_(std::move(matrix)) {
  if (labels_.empty()) throw std::invalid_argument("edge label table needs at least one label");
  if (matrix_.rows() != labels_.size())
    throw ShapeError("edge label table: " + std::to_string(labels_.size()) + " labels but matrix " +
                     shape_str(matrix_.shape()));
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!index_.emplace(labels_[i], i).second) throw std::invalid_argument("duplicate edge label " + labels_[i]);
}

std::size_t EdgeLabelTable::id(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw std::out_of_range("unknown edge label '" + label + "'");
  return it->second;
}

EdgeLabelTable init_edge_labels(const std::vector<std::string>& labels, std::size_t dim, Rng& rng, double range) {
  if (labels.empty()) throw std::invalid_argument("init_edge_labels: empty label list");
  Tensor<double> m({labels.size(), dim});
  for (auto& v : m.storage()) v = rng.uniform(-range, range);
  return EdgeLabelTable(labels, std::move(m));
}

}  // namespace nrel
