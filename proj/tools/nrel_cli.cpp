#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "nrel/benchmark.hpp"
#include "nrel/checkpoint.hpp"
#include "nrel/synthetic.hpp"
#include "nrel/train.hpp"

using namespace nrel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::size_t mention_count(std::span<const Instance> data) {
  if (data.empty()) throw std::invalid_argument("no instances");
  const std::size_t n = data.front().mentions.size();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].mentions.size() != n)
      throw std::invalid_argument("instance " + std::to_string(i) + " has " + std::to_string(data[i].mentions.size()) +
                                  " mentions, expected " + std::to_string(n));
  return n;
}

void write_json_lines(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

json eval_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy()},       {"correct", r.correct},
          {"total", r.total},               {"single_accuracy", r.single_accuracy()},
          {"single_correct", r.single_correct}, {"single_total", r.single_total},
          {"classes", r.classes},           {"confusion", r.confusion}};
}

struct TrainArgs {
  std::string config, data, dev, schema, emb, out;
  std::vector<std::string> overrides;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config, a.overrides);
  const auto schema = RelationSchema::load(a.schema);
  const auto words = load_word_vectors(a.emb, cfg.vocab_limit);
  auto data = load_instances(a.data, schema);
  std::vector<Instance> train_set, dev_set;
  if (!a.dev.empty()) {
    train_set = std::move(data);
    dev_set = load_instances(a.dev, schema);
  } else {
    std::vector<std::size_t> ids(data.size());
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(cfg.seed);
    rng.shuffle(ids.begin(), ids.end());
    const std::size_t nd = dev_carve_size(ids.size(), cfg.dev_size);
    for (std::size_t k = 0; k < ids.size(); ++k) (k < nd ? dev_set : train_set).push_back(data[ids[k]]);
  }

  std::vector<Instance> all(train_set);
  all.insert(all.end(), dev_set.begin(), dev_set.end());
  RelationModel<double> model(cfg, schema, words, collect_edge_labels(all), mention_count(all));

  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "train_log.jsonl");
  auto result = train(std::move(model), train_set, dev_set, [&](const EpochLog& e) {
    write_json_lines(log, to_json(e));
    log.flush();
    std::cerr << "epoch " << e.epoch << "  loss " << e.train_loss << "  dev " << e.dev_acc << '\n';
  });
  save_checkpoint((fs::path(a.out) / "model.ckpt").string(), result.model);
  std::ofstream(fs::path(a.out) / "config.txt") << result.model.config().to_text();
  json summary{{"best_epoch", result.best_epoch},   {"best_dev_acc", result.best_dev_acc},
               {"epochs", result.log.size()},        {"stopped_early", result.stopped_early},
               {"train_size", train_set.size()},     {"dev_size", dev_set.size()}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& mode) {
  const auto model = load_checkpoint(ckpt);
  const auto items = load_instances(data, model.schema());
  const TaskMode m = mode.empty() ? model.config().mode : parse_mode(mode);
  auto j = eval_json(evaluate(model, items, m));
  j["mode"] = to_string(m);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& data, const std::string& out_path) {
  const auto model = load_checkpoint(ckpt);
  const auto items = load_instances(data, model.schema());
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  for (const auto& x : items) {
    const auto probs = model.predict(x);
    json j{{"probs", probs}, {"pred", model.class_name(argmax(probs))}, {"gold", nullptr}};
    if (x.gold) j["gold"] = model.class_name(model.target(x));
    write_json_lines(out, j);
  }
  return 0;
}

struct CvArgs {
  std::string config, data, schema, emb, folds, save_folds, log;
  std::size_t k = 5;
  std::vector<std::string> overrides;
};

int cmd_cv(const CvArgs& a) {
  const auto cfg = load_config(a.config, a.overrides);
  const auto schema = RelationSchema::load(a.schema);
  const auto words = load_word_vectors(a.emb, cfg.vocab_limit);
  const auto data = load_instances(a.data, schema);
  FoldSplit split;
  if (!a.folds.empty() && fs::exists(a.folds)) {
    split = FoldSplit::load(a.folds);
  } else {
    Rng rng(cfg.seed);
    split = FoldSplit::generate(data.size(), a.k, rng);
    if (!a.folds.empty()) split.save(a.folds);
  }
  if (!a.save_folds.empty()) split.save(a.save_folds);

  std::ofstream log;
  if (!a.log.empty()) log.open(a.log);
  const auto cv = cross_validate(data, split, cfg, schema, words, [&](std::size_t fold, const EpochLog& e) {
    auto j = to_json(e);
    j["fold"] = fold;
    if (log) write_json_lines(log, j);
    std::cerr << "fold " << fold << "  epoch " << e.epoch << "  loss " << e.train_loss << "  dev " << e.dev_acc
              << '\n';
  });
  json folds = json::array();
  for (const auto& f : cv.folds) {
    auto j = eval_json(f.test);
    j["best_epoch"] = f.best_epoch;
    j["best_dev_acc"] = f.best_dev_acc;
    j["train_size"] = f.train_size;
    j["dev_size"] = f.dev_size;
    folds.push_back(j);
  }
  std::cout << json{{"folds", folds},
                    {"mean_accuracy", cv.mean_accuracy},
                    {"stddev_accuracy", cv.stddev_accuracy},
                    {"mean_single_accuracy", cv.mean_single_accuracy}}
                   .dump(2)
            << '\n';
  return 0;
}

struct BenchArgs {
  std::string encoder = "grn", data, schema, emb;
  int threads = 1;
  std::size_t graphs = 100, tokens = 64, hidden = 150, word_dim = 100, steps = 5;
  bool train = false, f32 = false;
};

int cmd_benchmark(const BenchArgs& a) {
  TrainConfig cfg;
  cfg.encoder = parse_encoder(a.encoder);
  cfg.threads = a.threads;
  cfg.hidden = a.hidden;
  cfg.steps = a.steps;
  cfg.dropout = 0.0;
  RelationSchema schema = hop_task_schema();
  WordEmbeddingTable words;
  std::vector<Instance> data;
  if (!a.data.empty()) {
    schema = RelationSchema::load(a.schema);
    words = load_word_vectors(a.emb);
    data = load_instances(a.data, schema);
  } else {
    Rng rng(cfg.seed);
    words = make_random_vectors(50, a.word_dim, rng);
    data = make_chain_instances(a.graphs, a.tokens, 50, rng);
  }
  cfg.word_dim = words.dim();
  if (a.f32) {
    const RelationModel<float> model(cfg, schema, words, collect_edge_labels(data), mention_count(data));
    EncodeStats stats;
    const double secs = time_decode(model, data, &stats);
    const double n = static_cast<double>(data.size());
    std::cout << json{{"encoder", a.encoder},
                      {"precision", "f32"},
                      {"threads", a.threads},
                      {"instances", data.size()},
                      {"decode_seconds", secs},
                      {"cells_per_graph", static_cast<double>(stats.cell_evaluations) / n},
                      {"critical_path_per_graph", static_cast<double>(stats.critical_path) / n}}
                     .dump(2)
              << '\n';
    return 0;
  }
  RelationModel<double> model(cfg, schema, words, collect_edge_labels(data), mention_count(data));
  std::cout << to_json(run_benchmark(model, data, a.train)).dump(2) << '\n';
  return 0;
}

struct GradArgs {
  std::string encoder = "grn";
  std::uint64_t seed = 1;
  std::size_t tokens = 5, hidden = 8, steps = 3;
};

int cmd_gradcheck(const GradArgs& a) {
  const auto rep = model_gradient_check({parse_encoder(a.encoder), a.tokens, a.hidden, a.steps, a.seed});
  std::cout << json{{"encoder", a.encoder},
                    {"seed", a.seed},
                    {"coordinates", rep.coordinates},
                    {"max_rel_error", rep.max_rel_error},
                    {"worst_param", rep.worst_param},
                    {"worst_index", rep.worst_index},
                    {"analytic", rep.worst_analytic},
                    {"numeric", rep.worst_numeric},
                    {"passed", rep.passed}}
                   .dump(2)
            << '\n';
  return rep.passed ? 0 : 1;
}

int cmd_stats(const std::string& data, const std::string& schema_path) {
  const auto items = load_instances(data, RelationSchema::load(schema_path));
  const auto s = dataset_stats(items);
  std::cout << json{{"instances", items.size()},
                    {"avg_tokens", s.avg_tokens},
                    {"avg_sentences", s.avg_sentences},
                    {"cross_percent", 100.0 * s.cross_fraction}}
                   .dump(2)
            << '\n';
  return 0;
}

struct SynthArgs {
  std::string out;
  std::size_t count = 200, hops = 2, word_dim = 16;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  HopTaskOptions opt;
  opt.path_hops = a.hops;
  if (a.hops > 2) {
    opt.min_tokens = std::max(opt.min_tokens, a.hops + 1);
    opt.max_tokens = std::max(opt.max_tokens, a.hops + 4);
  }
  Rng rng(a.seed);
  fs::create_directories(a.out);
  const auto raw = make_hop_task_raw(a.count, opt, rng);
  save_raw((fs::path(a.out) / "data.jsonl").string(), raw);
  const auto schema = hop_task_schema();
  std::ofstream labels(fs::path(a.out) / "labels.txt");
  for (const auto& l : schema.labels()) labels << l << '\n';
  save_word_vectors((fs::path(a.out) / "vectors.txt").string(), make_random_vectors(opt.vocab, a.word_dim, rng));
  std::cout << "wrote " << a.count << " instances to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-state LSTM and DAG LSTM relation extraction"};
  app.require_subcommand(1);
  int status = 0;

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint directory");
  train_cmd->add_option("--config", ta.config, "key=value config file");
  train_cmd->add_option("--set", ta.overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--data", ta.data, "Training instances (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", ta.dev, "Dev instances; carved from --data when absent")->check(CLI::ExistingFile);
  train_cmd->add_option("--schema", ta.schema, "Relation labels, one per line")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--emb", ta.emb, "Word vectors")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ta.out, "Output directory")->required();
  train_cmd->callback([&] { status = cmd_train(ta); });

  std::string ckpt, data, mode, out;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on labeled data");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint file or directory")->required();
  eval_cmd->add_option("--data", data, "Instances (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mode", mode, "binary or multiclass")->check(CLI::IsMember({"binary", "multiclass"}));
  eval_cmd->callback([&] { status = cmd_eval(ckpt, data, mode); });

  auto* predict_cmd = app.add_subcommand("predict", "Class probabilities per instance as JSONL");
  predict_cmd->add_option("--ckpt", ckpt, "Checkpoint file or directory")->required();
  predict_cmd->add_option("--data", data, "Instances (JSONL)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", out, "Output file (default stdout)");
  predict_cmd->callback([&] { status = cmd_predict(ckpt, data, out); });

  CvArgs ca;
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  cv_cmd->add_option("--folds", ca.folds, "Fold file; generated and written there when missing");
  cv_cmd->add_option("--k", ca.k, "Fold count when generating")->capture_default_str();
  cv_cmd->add_option("--save-folds", ca.save_folds, "Also write the folds used");
  cv_cmd->add_option("--config", ca.config, "key=value config file");
  cv_cmd->add_option("--set", ca.overrides, "Config override key=value (repeatable)");
  cv_cmd->add_option("--data", ca.data, "Instances (JSONL)")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--schema", ca.schema, "Relation labels")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--emb", ca.emb, "Word vectors")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--log", ca.log, "Per-epoch JSONL log");
  cv_cmd->callback([&] { status = cmd_cv(ca); });

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("benchmark", "Decode (and optionally train) timing");
  bench_cmd->add_option("--encoder", ba.encoder)->check(CLI::IsMember({"grn", "dag"}))->capture_default_str();
  bench_cmd->add_option("--threads", ba.threads)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--graphs", ba.graphs, "Synthetic chain count")->capture_default_str();
  bench_cmd->add_option("--tokens", ba.tokens, "Tokens per synthetic chain")->capture_default_str();
  bench_cmd->add_option("--hidden", ba.hidden)->capture_default_str();
  bench_cmd->add_option("--word-dim", ba.word_dim, "Synthetic vector size")->capture_default_str();
  bench_cmd->add_option("--steps", ba.steps)->capture_default_str();
  bench_cmd->add_flag("--train", ba.train, "Also time one training epoch");
  bench_cmd->add_flag("--f32", ba.f32, "Decode in single precision (no training)");
  bench_cmd->add_option("--data", ba.data, "Use these instances instead of synthetic chains");
  bench_cmd->add_option("--schema", ba.schema);
  bench_cmd->add_option("--emb", ba.emb);
  bench_cmd->callback([&] { status = cmd_benchmark(ba); });

  GradArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  grad_cmd->add_option("--encoder", ga.encoder)->check(CLI::IsMember({"grn", "dag"}))->capture_default_str();
  grad_cmd->add_option("--seed", ga.seed)->capture_default_str();
  grad_cmd->add_option("--tokens", ga.tokens)->check(CLI::Range(2, 64))->capture_default_str();
  grad_cmd->add_option("--hidden", ga.hidden)->capture_default_str();
  grad_cmd->add_option("--steps", ga.steps)->capture_default_str();
  grad_cmd->callback([&] { status = cmd_gradcheck(ga); });

  std::string schema;
  auto* stats_cmd = app.add_subcommand("stats", "Average tokens, sentences and cross-sentence share");
  stats_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
  stats_cmd->callback([&] { status = cmd_stats(data, schema); });

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic path task with labels and vectors");
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--count", sa.count)->capture_default_str();
  synth_cmd->add_option("--hops", sa.hops)->check(CLI::Range(1, 10))->capture_default_str();
  synth_cmd->add_option("--word-dim", sa.word_dim)->capture_default_str();
  synth_cmd->add_option("--seed", sa.seed)->capture_default_str();
  synth_cmd->callback([&] { status = cmd_synth(sa); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}
