#include "nrel/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "nrel/synthetic.hpp"

namespace nrel {

nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_acc", e.dev_acc}};
  if (e.train_acc) j["train_acc"] = *e.train_acc;
  return j;
}

std::size_t predict_class(const RelationModel<double>& model, const Instance& x) {
  return argmax(model.predict(x));
}

EvalResult evaluate(const RelationModel<double>& model, std::span<const Instance> data, TaskMode mode) {
  const auto& schema = model.schema();
  const bool model_binary = model.config().mode == TaskMode::binary;
  if (model_binary && mode == TaskMode::multiclass)
    throw std::invalid_argument("evaluate: model was trained in binary mode and cannot be scored multi-class");
  EvalResult r;
  r.classes = mode == TaskMode::binary ? RelationSchema::binary_labels() : schema.labels();
  r.confusion.assign(r.classes.size(), std::vector<std::size_t>(r.classes.size(), 0));
  for (const auto& x : data) {
    if (!x.gold) throw std::invalid_argument("evaluate: instance without a gold label");
    std::size_t pred = predict_class(model, x);
    std::size_t gold = *x.gold;
    if (mode == TaskMode::binary) {
      if (!model_binary) pred = schema.binarize(pred);
      gold = schema.binarize(gold);
    }
    ++r.confusion[gold][pred];
    ++r.total;
    const bool hit = pred == gold;
    r.correct += hit;
    if (x.graph.num_sentences() == 1) {
      ++r.single_total;
      r.single_correct += hit;
    }
  }
  return r;
}

double batch_loss_and_grad(const RelationModel<double>& model, std::span<const Instance> batch,
                           Gradients<double>& grads) {
  double loss = 0;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& x : batch) loss += model.accumulate_gradient(x, grads, w, {}) * w;
  return loss;
}

namespace {

double accuracy_of(const RelationModel<double>& model, std::span<const Instance> data) {
  return evaluate(model, data, model.config().mode).accuracy();
}

}  // namespace

TrainResult train(RelationModel<double> model, std::span<const Instance> train_set, std::span<const Instance> dev_set,
                  const EpochCallback& on_epoch) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (dev_set.empty()) throw std::invalid_argument("train: empty dev set");
  const TrainConfig cfg = model.config();
  Rng streams(cfg.seed ^ 0x5eed5eed5eedULL);
  Rng shuffle_rng = streams.fork();
  Rng dropout_rng = streams.fork();
  AdamState<double> adam(model.params());
  const AdamOptions opt{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  const DropoutCtx drop{cfg.dropout, &dropout_rng, true};

  TrainResult result{model, {}, 0, -1.0, false};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients<double> grads(model.params());

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      grads.zero();
      for (std::size_t k = start; k < end; ++k) {
        double loss = 0;
        try {
          loss = model.accumulate_gradient(train_set[order[k]], grads, w, drop);
        } catch (const NumericError& e) {
          throw NumericError("epoch " + std::to_string(epoch) + ", instance " + std::to_string(order[k]) + ": " +
                             e.what());
        }
        if (!std::isfinite(loss))
          throw NumericError("epoch " + std::to_string(epoch) + ", instance " + std::to_string(order[k]) +
                             ": non-finite loss");
        loss_sum += loss;
      }
      if (cfg.grad_clip > 0) clip_global_norm(grads, model.params(), cfg.grad_clip);
      adam_step(model.params(), grads, adam, opt);
    }

    EpochLog entry{epoch, loss_sum / static_cast<double>(order.size()), accuracy_of(model, dev_set), std::nullopt};
    if (cfg.track_train_acc) entry.train_acc = accuracy_of(model, train_set);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.dev_acc > result.best_dev_acc) {
      result.best_dev_acc = entry.dev_acc;
      result.best_epoch = epoch;
      result.model.params() = model.params();
    } else if (epoch - result.best_epoch >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

FoldSplit FoldSplit::generate(std::size_t n, std::size_t k, Rng& rng) {
  if (k < 2 || k > n) throw std::invalid_argument("cannot split " + std::to_string(n) + " instances into " +
                                                  std::to_string(k) + " folds");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids.begin(), ids.end());
  FoldSplit s;
  s.folds.resize(k);
  for (std::size_t i = 0; i < n; ++i) s.folds[i % k].push_back(ids[i]);
  for (auto& f : s.folds) std::sort(f.begin(), f.end());
  return s;
}

FoldSplit FoldSplit::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open folds file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  const auto& arr = j.is_object() ? j.at("folds") : j;
  FoldSplit s;
  try {
    s.folds = arr.get<std::vector<std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": folds must be arrays of instance ids (" + e.what() + ")");
  }
  return s;
}

void FoldSplit::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write folds file " + path);
  out << nlohmann::json{{"folds", folds}}.dump() << '\n';
}

void FoldSplit::validate(std::size_t n) const {
  if (folds.size() < 2) throw std::invalid_argument("need at least two folds");
  std::vector<int> seen(n, 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].empty()) throw std::invalid_argument("fold " + std::to_string(f) + " is empty");
    for (std::size_t id : folds[f]) {
      if (id >= n) throw std::invalid_argument("fold " + std::to_string(f) + " names instance " + std::to_string(id) +
                                               " but the dataset has " + std::to_string(n));
      if (seen[id]++) throw std::invalid_argument("instance " + std::to_string(id) + " appears in more than one fold");
    }
  }
  for (std::size_t id = 0; id < n; ++id)
    if (!seen[id]) throw std::invalid_argument("instance " + std::to_string(id) + " is in no fold");
}

std::size_t dev_carve_size(std::size_t portion, std::size_t requested) {
  if (portion < 2) throw std::invalid_argument("training portion too small for a dev carve-out");
  return std::min(requested, std::max<std::size_t>(1, portion / 5));
}

CvResult cross_validate(std::span<const Instance> data, const FoldSplit& split, const TrainConfig& cfg,
                        const RelationSchema& schema, const WordEmbeddingTable& words,
                        const FoldEpochCallback& on_epoch) {
  if (data.empty()) throw std::invalid_argument("cross_validate: empty dataset");
  split.validate(data.size());
  const auto labels = collect_edge_labels(data);
  const std::size_t mentions = data.front().mentions.size();

  CvResult out;
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    const std::set<std::size_t> test_ids(split.folds[f].begin(), split.folds[f].end());
    std::vector<std::size_t> portion;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!test_ids.count(i) && (!cfg.retrain_single || data[i].graph.num_sentences() == 1)) portion.push_back(i);
    Rng carve(cfg.seed + 7919 * (f + 1));
    carve.shuffle(portion.begin(), portion.end());
    const std::size_t n_dev = dev_carve_size(portion.size(), cfg.dev_size);

    std::vector<Instance> dev, tr, test;
    for (std::size_t k = 0; k < portion.size(); ++k) (k < n_dev ? dev : tr).push_back(data[portion[k]]);
    for (std::size_t id : split.folds[f]) test.push_back(data[id]);

    RelationModel<double> model(cfg, schema, words, labels, mentions);
    auto res = train(std::move(model), tr, dev, [&](const EpochLog& e) {
      if (on_epoch) on_epoch(f, e);
    });
    FoldResult fr{evaluate(res.model, test, cfg.mode), res.best_epoch, res.best_dev_acc, tr.size(), dev.size()};
    out.folds.push_back(std::move(fr));
  }
  const double k = static_cast<double>(out.folds.size());
  for (const auto& fr : out.folds) {
    out.mean_accuracy += fr.test.accuracy() / k;
    out.mean_single_accuracy += fr.test.single_accuracy() / k;
  }
  for (const auto& fr : out.folds) out.stddev_accuracy += std::pow(fr.test.accuracy() - out.mean_accuracy, 2) / k;
  out.stddev_accuracy = std::sqrt(out.stddev_accuracy);
  return out;
}

GradCheckReport model_gradient_check(const ModelGradCheckOptions& opt) {
  if (opt.tokens < 2) throw std::invalid_argument("gradient check needs at least two tokens");
  TrainConfig cfg;
  cfg.encoder = opt.encoder;
  cfg.hidden = opt.hidden;
  cfg.word_dim = 4;
  cfg.steps = opt.steps;
  cfg.seed = opt.seed;
  cfg.mode = TaskMode::multiclass;
  Rng rng(opt.seed);
  const auto words = make_random_vectors(10, cfg.word_dim, rng);
  const std::vector<std::string> labels{"nsubj", "dobj", "amod"};
  Instance x;
  x.graph = make_random_graph(opt.tokens, opt.tokens + 2, labels, 10, rng);
  x.mentions = {{1, {0}}, {2, {opt.tokens - 1}}};
  x.gold = 1;
  RelationModel<double> model(cfg, RelationSchema({"None", "sensitivity", "resistance"}), words, labels, 2);
  for (auto& e : model.params().entries())
    if (e.value.rank() == 1)
      for (auto& v : e.value.storage()) v = rng.uniform(-0.5, 0.5);
  const LossFn loss = [&](Tape<double>&, ParamBinder<double>& p) {
    return ad::softmax_cross_entropy(model.logits(p, x), model.target(x)).loss;
  };
  return grad_check(loss, model.params());
}

}  // namespace nrel
