#pragma once

#include <cstdint>
#include <string>

#include "nrel/classifier.hpp"
#include "nrel/dag_encoder.hpp"
#include "nrel/grn_encoder.hpp"

namespace nrel {

enum class EncoderKind { grn, dag };
enum class TaskMode { binary, multiclass };

/// Every knob of a run. Defaults follow the published setup where it states
/// one; the rest are documented choices.
struct TrainConfig {
  double learning_rate = 0.001;
  double dropout = 0.3;
  std::size_t batch_size = 8;
  std::size_t steps = 5;
  std::size_t hidden = 150;
  std::size_t word_dim = 100;
  std::size_t edge_dim = 3;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  EncoderKind encoder = EncoderKind::grn;
  TaskMode mode = TaskMode::binary;
  GrnMask grn_mask = GrnMask::all;
  ad::Activation candidate = ad::Activation::sigmoid;
  Pooling pooling = Pooling::mean;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double edge_init_range = 0.1;
  std::size_t dev_size = 200;
  std::size_t vocab_limit = 0;
  int threads = 1;
  bool track_train_acc = false;
  bool retrain_single = false;  // cross-validation: train on single-sentence instances only

  /// Flat "key=value" lines; '#' starts a comment. Unknown keys are errors.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::string& path);
  std::string to_text() const;
  void set(const std::string& key, const std::string& value);
  void validate() const;

  std::size_t encoder_width() const;
  DagConfig dag() const { return {hidden, word_dim, edge_dim, candidate}; }
  GrnConfig grn() const { return {hidden, word_dim, edge_dim, steps, candidate}; }
};

std::string to_string(EncoderKind k);
std::string to_string(TaskMode m);
std::string to_string(GrnMask m);
std::string to_string(ad::Activation a);
std::string to_string(Pooling p);
EncoderKind parse_encoder(const std::string& s);
TaskMode parse_mode(const std::string& s);
GrnMask parse_mask(const std::string& s);

}  // namespace nrel
