#include "nrel/benchmark.hpp"

#include <chrono>

#include "nrel/train.hpp"

namespace nrel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

nlohmann::json to_json(const BenchmarkResult& r) {
  return {{"encoder", r.encoder},
          {"threads", r.threads},
          {"instances", r.instances},
          {"tokens", r.tokens},
          {"train_seconds_per_epoch", r.train_seconds_per_epoch},
          {"decode_seconds", r.decode_seconds},
          {"cells_per_graph", r.cells_per_graph},
          {"critical_path_per_graph", r.critical_path_per_graph}};
}

template <typename T>
double time_decode(const RelationModel<T>& model, std::span<const Instance> data, EncodeStats* stats) {
  const auto t0 = Clock::now();
  for (const auto& x : data) {
    Tape<T> tape(false, kernels::Exec{model.config().threads});
    ParamBinder<T> p(tape, model.params());
    const auto logits = model.logits(p, x, {}, stats);
    (void)logits;
  }
  return seconds_since(t0);
}

template double time_decode(const RelationModel<double>&, std::span<const Instance>, EncodeStats*);
template double time_decode(const RelationModel<float>&, std::span<const Instance>, EncodeStats*);

BenchmarkResult run_benchmark(const RelationModel<double>& model, std::span<const Instance> data, bool time_training) {
  if (data.empty()) throw std::invalid_argument("benchmark: no instances");
  const auto& cfg = model.config();
  BenchmarkResult r;
  r.encoder = to_string(cfg.encoder);
  r.threads = cfg.threads;
  r.instances = data.size();
  for (const auto& x : data) r.tokens += x.graph.num_tokens();

  EncodeStats stats;
  r.decode_seconds = time_decode(model, data, &stats);
  r.cells_per_graph = static_cast<double>(stats.cell_evaluations) / data.size();
  r.critical_path_per_graph = static_cast<double>(stats.critical_path) / data.size();

  if (time_training) {
    RelationModel<double> m = model;
    m.config().max_epochs = 1;
    std::vector<Instance> labeled(data.begin(), data.end());
    for (auto& x : labeled)
      if (!x.gold) x.gold = m.schema().none_index();
    const auto t0 = Clock::now();
    train(std::move(m), labeled, std::span<const Instance>(labeled).first(1));
    r.train_seconds_per_epoch = seconds_since(t0);
  }
  return r;
}

}  // namespace nrel
