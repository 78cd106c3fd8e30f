#include "nrel/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace nrel {

using nlohmann::json;

RelationSchema::RelationSchema(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::set<std::string> seen;
  std::size_t nones = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!seen.insert(labels_[i]).second) throw FormatError("schema: duplicate label " + labels_[i]);
    if (labels_[i] == kNoneLabel) {
      none_ = i;
      ++nones;
    }
  }
  if (nones != 1) throw FormatError("schema: label list must contain None exactly once");
  if (labels_.size() < 2) throw FormatError("schema: need at least one relation besides None");
}

RelationSchema RelationSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open schema file " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  return RelationSchema(std::move(labels));
}

std::size_t RelationSchema::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw FormatError("label '" + label + "' is not in the relation schema");
  return static_cast<std::size_t>(it - labels_.begin());
}

const std::vector<std::string>& RelationSchema::binary_labels() {
  static const std::vector<std::string> labels{"No", "Yes"};
  return labels;
}

RawInstance raw_from_json(const json& j) {
  RawInstance r;
  for (const auto& s : j.at("sentences")) {
    SentenceInput in;
    in.tokens = s.at("tokens").get<std::vector<std::string>>();
    if (s.contains("arcs"))
      for (const auto& a : s.at("arcs"))
        in.arcs.push_back({a.at("head").get<std::size_t>(), a.at("dep").get<std::size_t>(),
                           a.at("label").get<std::string>()});
    in.root = s.at("root").get<std::size_t>();
    r.sentences.push_back(std::move(in));
  }
  for (const auto& e : j.at("entities")) {
    const auto span = e.at("span").get<std::vector<std::size_t>>();
    if (span.size() != 2) throw FormatError("entity span must be [first, last]");
    r.entities.push_back({e.at("slot").get<std::size_t>(), e.at("sentence").get<std::size_t>(), span[0], span[1]});
  }
  if (j.contains("label") && !j.at("label").is_null()) r.label = j.at("label").get<std::string>();
  return r;
}

json raw_to_json(const RawInstance& r) {
  json sentences = json::array();
  for (const auto& s : r.sentences) {
    json arcs = json::array();
    for (const auto& a : s.arcs) arcs.push_back({{"head", a.head}, {"dep", a.dep}, {"label", a.label}});
    sentences.push_back({{"tokens", s.tokens}, {"arcs", arcs}, {"root", s.root}});
  }
  json entities = json::array();
  for (const auto& e : r.entities)
    entities.push_back({{"slot", e.slot}, {"sentence", e.sentence}, {"span", {e.first, e.last}}});
  json out{{"sentences", sentences}, {"entities", entities}};
  out["label"] = r.label ? json(*r.label) : json(nullptr);
  return out;
}

Instance to_instance(const RawInstance& r, const RelationSchema& schema) {
  Instance inst;
  inst.graph = build_graph(r.sentences);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& s : r.sentences) {
    offsets.push_back(total);
    total += s.tokens.size();
  }
  for (const auto& e : r.entities) {
    if (e.sentence >= r.sentences.size())
      throw FormatError("entity slot " + std::to_string(e.slot) + " names missing sentence " + std::to_string(e.sentence));
    const std::size_t len = r.sentences[e.sentence].tokens.size();
    if (e.first > e.last || e.last >= len)
      throw FormatError("entity slot " + std::to_string(e.slot) + " has span [" + std::to_string(e.first) + "," +
                        std::to_string(e.last) + "] outside a sentence of " + std::to_string(len) + " tokens");
    EntityMention m;
    m.slot = e.slot;
    for (std::size_t t = e.first; t <= e.last; ++t) m.tokens.push_back(offsets[e.sentence] + t);
    inst.mentions.push_back(std::move(m));
  }
  std::sort(inst.mentions.begin(), inst.mentions.end(), [](const auto& a, const auto& b) { return a.slot < b.slot; });
  if (inst.mentions.size() < 2) throw FormatError("an instance needs at least two entity mentions");
  for (std::size_t i = 0; i < inst.mentions.size(); ++i)
    if (inst.mentions[i].slot != i + 1)
      throw FormatError("entity slots must be 1.." + std::to_string(inst.mentions.size()) + ", each exactly once");
  if (r.label) inst.gold = schema.index_of(*r.label);
  return inst;
}

namespace {

// Calls fn(raw) for every non-blank line; any failure is reported as path:line.
template <typename F>
void for_each_record(const std::string& path, F fn) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open instance file " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(raw_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<RawInstance> load_raw(const std::string& path) {
  std::vector<RawInstance> out;
  for_each_record(path, [&](RawInstance r) { out.push_back(std::move(r)); });
  return out;
}

std::vector<Instance> load_instances(const std::string& path, const RelationSchema& schema) {
  std::vector<Instance> out;
  for_each_record(path, [&](const RawInstance& r) { out.push_back(to_instance(r, schema)); });
  return out;
}

void save_raw(const std::string& path, std::span<const RawInstance> items) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& r : items) out << raw_to_json(r).dump() << '\n';
}

DatasetStats dataset_stats(std::span<const Instance> instances) {
  if (instances.empty()) throw std::invalid_argument("dataset_stats: empty instance list");
  DatasetStats s;
  std::size_t cross = 0;
  for (const auto& inst : instances) {
    s.avg_tokens += static_cast<double>(inst.graph.num_tokens());
    s.avg_sentences += static_cast<double>(inst.graph.num_sentences());
    if (inst.graph.num_sentences() >= 2) ++cross;
  }
  const auto n = static_cast<double>(instances.size());
  s.avg_tokens /= n;
  s.avg_sentences /= n;
  s.cross_fraction = static_cast<double>(cross) / n;
  return s;
}

}  // namespace nrel
