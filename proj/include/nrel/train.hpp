#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nrel/adam.hpp"
#include "nrel/grad_check.hpp"
#include "nrel/model.hpp"

namespace nrel {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean per-instance loss over the epoch
  double dev_acc = 0;
  std::optional<double> train_acc;
};

nlohmann::json to_json(const EpochLog& e);

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t single_correct = 0;  // instances with one sentence
  std::size_t single_total = 0;
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
  double single_accuracy() const { return single_total ? static_cast<double>(single_correct) / single_total : 0.0; }
};

/// Accuracy in the requested label space. A multi-class model can be scored in
/// binary mode (predictions are grouped through the schema); a binary model
/// cannot be scored in multi-class mode.
EvalResult evaluate(const RelationModel<double>& model, std::span<const Instance> data, TaskMode mode);

/// Predicted class in the model's own label space.
std::size_t predict_class(const RelationModel<double>& model, const Instance& x);

struct TrainResult {
  RelationModel<double> model;  // parameters of the best dev epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Shuffled mini-batches, mean batch loss, Adam, dev selection with patience.
/// Everything random is drawn from streams derived from config().seed.
TrainResult train(RelationModel<double> model, std::span<const Instance> train_set, std::span<const Instance> dev_set,
                  const EpochCallback& on_epoch = {});

/// Mean cross-entropy over a batch and its gradient (no dropout).
double batch_loss_and_grad(const RelationModel<double>& model, std::span<const Instance> batch,
                           Gradients<double>& grads);

/// Folds of instance ids that must partition 0..n-1.
struct FoldSplit {
  std::vector<std::vector<std::size_t>> folds;

  static FoldSplit generate(std::size_t n, std::size_t k, Rng& rng);
  /// {"folds": [[...], ...]} or a bare array of arrays.
  static FoldSplit load(const std::string& path);
  void save(const std::string& path) const;
  void validate(std::size_t n) const;
};

/// Dev carve-out size for a training portion of `portion` instances.
std::size_t dev_carve_size(std::size_t portion, std::size_t requested);

struct FoldResult {
  EvalResult test;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0;
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
};

struct CvResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0;
  double stddev_accuracy = 0;
  double mean_single_accuracy = 0;
};

using FoldEpochCallback = std::function<void(std::size_t fold, const EpochLog&)>;

CvResult cross_validate(std::span<const Instance> data, const FoldSplit& split, const TrainConfig& cfg,
                        const RelationSchema& schema, const WordEmbeddingTable& words,
                        const FoldEpochCallback& on_epoch = {});

struct ModelGradCheckOptions {
  EncoderKind encoder = EncoderKind::grn;
  std::size_t tokens = 5;
  std::size_t hidden = 8;
  std::size_t steps = 3;
  std::uint64_t seed = 1;
};

/// Finite-difference check of the full model (edge labels, encoder,
/// classifier) on one random graph with random biases and a 3-class loss.
GradCheckReport model_gradient_check(const ModelGradCheckOptions& opt);

}  // namespace nrel
