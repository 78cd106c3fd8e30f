#include "nrel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace nrel {

namespace {

constexpr char kMagic[8] = {'N', 'R', 'E', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kTensorRecord = 1;
constexpr std::uint8_t kStringsRecord = 2;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

  template <typename U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, sizeof(U));
  }

  void str32(const std::string& s) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void tensor(const std::string& name, const Tensor<double>& t, bool frozen) {
    uint<std::uint8_t>(kTensorRecord);
    str32(name);
    uint<std::uint8_t>(frozen ? 1 : 0);
    uint<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) uint<std::uint64_t>(e);
    for (double v : t.values()) uint<std::uint64_t>(std::bit_cast<std::uint64_t>(v));
  }

  void strings(const std::string& name, const std::vector<std::string>& list) {
    uint<std::uint8_t>(kStringsRecord);
    str32(name);
    uint<std::uint64_t>(list.size());
    for (const auto& s : list) {
      uint<std::uint64_t>(s.size());
      bytes(s.data(), s.size());
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError(path_ + ": truncated checkpoint");
  }

  template <typename U>
  U uint() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
  }

  std::string str(std::uint64_t n) {
    if (n > (1ULL << 32)) throw FormatError(path_ + ": implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  const std::string& path() const { return path_; }

 private:
  std::istream& in_;
  std::string path_;
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + '\n';
  return s;
}

}  // namespace

std::string resolve_checkpoint_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) return (fs::path(path) / "model.ckpt").string();
  return path;
}

void save_checkpoint(const std::string& path, const RelationModel<double>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.strings("config", split_lines(model.config().to_text()));
  w.strings("schema", model.schema().labels());
  w.strings("vocab", model.vocab().words());
  w.strings("edge_labels", model.edge_labels());
  w.strings("mentions", {std::to_string(model.mentions())});
  for (const auto& e : model.params().entries()) w.tensor(e.name, e.value, e.frozen);
  if (!out) throw std::runtime_error("error while writing checkpoint " + path);
}

RelationModel<double> load_checkpoint(const std::string& path_in) {
  const std::string path = resolve_checkpoint_path(path_in);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError(path + ": not a checkpoint file");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

  std::map<std::string, std::vector<std::string>> lists;
  ParamSet<double> params;
  while (!r.at_end()) {
    const auto kind = r.uint<std::uint8_t>();
    const std::string name = r.str(r.uint<std::uint32_t>());
    if (kind == kTensorRecord) {
      const bool frozen = r.uint<std::uint8_t>() != 0;
      const auto rank = r.uint<std::uint32_t>();
      if (rank == 0 || rank > 8) throw FormatError(path + ": bad rank for " + name);
      Shape shape(rank);
      for (auto& e : shape) e = r.uint<std::uint64_t>();
      Tensor<double> t(shape);
      for (auto& v : t.storage()) v = std::bit_cast<double>(r.uint<std::uint64_t>());
      params.add(name, std::move(t), frozen);
    } else if (kind == kStringsRecord) {
      const auto count = r.uint<std::uint64_t>();
      std::vector<std::string> list;
      for (std::uint64_t i = 0; i < count; ++i) list.push_back(r.str(r.uint<std::uint64_t>()));
      lists[name] = std::move(list);
    } else {
      throw FormatError(path + ": unknown record kind " + std::to_string(kind));
    }
  }
  for (const char* key : {"config", "schema", "vocab", "edge_labels", "mentions"})
    if (!lists.count(key)) throw FormatError(path + ": missing record " + key);

  Vocabulary vocab;
  const auto& words = lists["vocab"];
  if (words.empty() || words.front() != Vocabulary::kUnk) throw FormatError(path + ": vocabulary lacks the unknown entry");
  for (std::size_t i = 1; i < words.size(); ++i) vocab.add(words[i]);
  return RelationModel<double>(TrainConfig::parse(join_lines(lists["config"])), RelationSchema(lists["schema"]),
                               std::move(vocab), lists["edge_labels"], std::stoul(lists["mentions"].front()),
                               std::move(params));
}

}  // namespace nrel
