#include "nrel/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nrel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || x < 0) throw std::invalid_argument("config: " + key + " needs a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw std::invalid_argument("config: " + key + " needs a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " needs true/false, got '" + v + "'");
}

}  // namespace

std::string to_string(EncoderKind k) { return k == EncoderKind::grn ? "grn" : "dag"; }
std::string to_string(TaskMode m) { return m == TaskMode::binary ? "binary" : "multiclass"; }

std::string to_string(GrnMask m) {
  switch (m) {
    case GrnMask::all: return "all";
    case GrnMask::forward_only: return "forward";
    case GrnMask::backward_only: return "backward";
    case GrnMask::concat: return "concat";
  }
  return "all";
}

std::string to_string(ad::Activation a) { return a == ad::Activation::sigmoid ? "sigmoid" : "tanh"; }

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::mean: return "mean";
    case Pooling::first: return "first";
    case Pooling::last: return "last";
  }
  return "mean";
}

EncoderKind parse_encoder(const std::string& s) {
  if (s == "grn") return EncoderKind::grn;
  if (s == "dag") return EncoderKind::dag;
  throw std::invalid_argument("encoder must be grn or dag, got '" + s + "'");
}

TaskMode parse_mode(const std::string& s) {
  if (s == "binary") return TaskMode::binary;
  if (s == "multiclass") return TaskMode::multiclass;
  throw std::invalid_argument("mode must be binary or multiclass, got '" + s + "'");
}

GrnMask parse_mask(const std::string& s) {
  if (s == "all") return GrnMask::all;
  if (s == "forward") return GrnMask::forward_only;
  if (s == "backward") return GrnMask::backward_only;
  if (s == "concat") return GrnMask::concat;
  throw std::invalid_argument("grn_mask must be all, forward, backward or concat, got '" + s + "'");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "dropout") dropout = to_double(key, value);
  else if (key == "batch_size") batch_size = to_size(key, value);
  else if (key == "steps") steps = to_size(key, value);
  else if (key == "hidden") hidden = to_size(key, value);
  else if (key == "word_dim") word_dim = to_size(key, value);
  else if (key == "edge_dim") edge_dim = to_size(key, value);
  else if (key == "max_epochs") max_epochs = to_size(key, value);
  else if (key == "patience") patience = to_size(key, value);
  else if (key == "seed") seed = to_size(key, value);
  else if (key == "encoder") encoder = parse_encoder(value);
  else if (key == "mode") mode = parse_mode(value);
  else if (key == "grn_mask") grn_mask = parse_mask(value);
  else if (key == "candidate_activation") {
    if (value == "sigmoid") candidate = ad::Activation::sigmoid;
    else if (value == "tanh") candidate = ad::Activation::tanh;
    else throw std::invalid_argument("candidate_activation must be sigmoid or tanh, got '" + value + "'");
  } else if (key == "pooling") {
    if (value == "mean") pooling = Pooling::mean;
    else if (value == "first") pooling = Pooling::first;
    else if (value == "last") pooling = Pooling::last;
    else throw std::invalid_argument("pooling must be mean, first or last, got '" + value + "'");
  } else if (key == "grad_clip") grad_clip = to_double(key, value);
  else if (key == "adam_beta1") adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") adam_beta2 = to_double(key, value);
  else if (key == "adam_eps") adam_eps = to_double(key, value);
  else if (key == "edge_init_range") edge_init_range = to_double(key, value);
  else if (key == "dev_size") dev_size = to_size(key, value);
  else if (key == "vocab_limit") vocab_limit = to_size(key, value);
  else if (key == "threads") threads = static_cast<int>(to_size(key, value));
  else if (key == "track_train_acc") track_train_acc = to_bool(key, value);
  else if (key == "retrain_single") retrain_single = to_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "learning_rate=" << learning_rate << '\n'
     << "dropout=" << dropout << '\n'
     << "batch_size=" << batch_size << '\n'
     << "steps=" << steps << '\n'
     << "hidden=" << hidden << '\n'
     << "word_dim=" << word_dim << '\n'
     << "edge_dim=" << edge_dim << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "patience=" << patience << '\n'
     << "seed=" << seed << '\n'
     << "encoder=" << to_string(encoder) << '\n'
     << "mode=" << to_string(mode) << '\n'
     << "grn_mask=" << to_string(grn_mask) << '\n'
     << "candidate_activation=" << to_string(candidate) << '\n'
     << "pooling=" << to_string(pooling) << '\n'
     << "grad_clip=" << grad_clip << '\n'
     << "adam_beta1=" << adam_beta1 << '\n'
     << "adam_beta2=" << adam_beta2 << '\n'
     << "adam_eps=" << adam_eps << '\n'
     << "edge_init_range=" << edge_init_range << '\n'
     << "dev_size=" << dev_size << '\n'
     << "vocab_limit=" << vocab_limit << '\n'
     << "threads=" << threads << '\n'
     << "track_train_acc=" << (track_train_acc ? "true" : "false") << '\n'
     << "retrain_single=" << (retrain_single ? "true" : "false") << '\n';
  return os.str();
}

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
  };
  positive(learning_rate > 0, "learning_rate");
  positive(batch_size > 0, "batch_size");
  positive(hidden > 0, "hidden");
  positive(word_dim > 0, "word_dim");
  positive(edge_dim > 0, "edge_dim");
  positive(max_epochs > 0, "max_epochs");
  positive(patience > 0, "patience");
  positive(threads > 0, "threads");
  positive(adam_eps > 0, "adam_eps");
  if (!(dropout >= 0 && dropout < 1)) throw std::invalid_argument("config: dropout must be in [0,1)");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    throw std::invalid_argument("config: Adam betas must be in [0,1)");
  if (grad_clip < 0) throw std::invalid_argument("config: grad_clip must be >= 0");
}

std::size_t TrainConfig::encoder_width() const {
  if (encoder == EncoderKind::dag) return 2 * hidden;
  return grn_mask == GrnMask::concat ? 2 * hidden : hidden;
}

}  // namespace nrel
