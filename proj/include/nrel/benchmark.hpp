#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "nrel/model.hpp"

namespace nrel {

struct BenchmarkResult {
  std::string encoder;
  int threads = 1;
  std::size_t instances = 0;
  std::size_t tokens = 0;
  double train_seconds_per_epoch = 0;  // 0 when training was not timed
  double decode_seconds = 0;
  double cells_per_graph = 0;          // node-state updates
  double critical_path_per_graph = 0;  // dependent sequential steps
};

nlohmann::json to_json(const BenchmarkResult& r);

/// Times one training epoch (optional) and full decoding of `data` with the
/// model's configured thread count.
BenchmarkResult run_benchmark(const RelationModel<double>& model, std::span<const Instance> data, bool time_training);

/// Decoding time only, for any scalar type.
template <typename T>
double time_decode(const RelationModel<T>& model, std::span<const Instance> data, EncodeStats* stats = nullptr);

}  // namespace nrel
