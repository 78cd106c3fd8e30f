// Serial reference vs OpenMP kernels, and GRN vs DAG decoding.
// Second argument is the thread count; 1 selects the serial path.

#include <benchmark/benchmark.h>

#include "nrel/benchmark.hpp"
#include "nrel/kernels.hpp"
#include "nrel/synthetic.hpp"

using namespace nrel;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Node count x hidden size; one step of the GRN gate projection.
void BM_GemmNN(benchmark::State& state) {
  const std::size_t m = state.range(0), k = 150, n = 600;
  const int threads = static_cast<int>(state.range(1));
  const auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    if (threads == 1)
      kernels::serial::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    else
      kernels::omp::gemm_nn(a.data(), b.data(), c.data(), m, k, n, threads);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * m * k * n);
}

void BM_GemmTN(benchmark::State& state) {
  const std::size_t m = state.range(0), p = 150, q = 600;
  const int threads = static_cast<int>(state.range(1));
  const auto a = random_vec(m * p, 3), b = random_vec(m * q, 4);
  std::vector<double> c(p * q);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    if (threads == 1)
      kernels::serial::gemm_tn(a.data(), b.data(), c.data(), m, p, q);
    else
      kernels::omp::gemm_tn(a.data(), b.data(), c.data(), m, p, q, threads);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * m * p * q);
}

void BM_SegmentSum(benchmark::State& state) {
  const std::size_t n = state.range(0), d = 150;
  const int threads = static_cast<int>(state.range(1));
  Rng rng(5);
  std::vector<std::vector<std::size_t>> lists(n);
  for (auto& l : lists)
    for (int e = 0; e < 3; ++e) l.push_back(rng.below(n));
  const auto seg = kernels::Segments::from_lists(lists, n);
  const auto x = random_vec(n * d, 6);
  std::vector<double> y(n * d);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    if (threads == 1)
      kernels::serial::segment_sum(x.data(), y.data(), d, seg);
    else
      kernels::omp::segment_sum(x.data(), y.data(), d, seg, threads);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_Decode(benchmark::State& state, EncoderKind encoder) {
  const int threads = static_cast<int>(state.range(1));
  Rng rng(7);
  const auto words = make_random_vectors(50, 100, rng);
  const auto data = make_chain_instances(8, static_cast<std::size_t>(state.range(0)), 50, rng);
  TrainConfig cfg;
  cfg.encoder = encoder;
  cfg.threads = threads;
  const RelationModel<double> model(cfg, hop_task_schema(), words, collect_edge_labels(data), 2);
  for (auto _ : state) benchmark::DoNotOptimize(time_decode(model, data));
  state.SetItemsProcessed(state.iterations() * data.size());
}

void kernel_args(benchmark::internal::Benchmark* b) {
  for (int m : {16, 64, 256})
    for (int t : {1, 2, 4}) b->Args({m, t});
}

void decode_args(benchmark::internal::Benchmark* b) {
  for (int t : {1, 4}) b->Args({64, t});
}

}  // namespace

BENCHMARK(BM_GemmNN)->Apply(kernel_args)->UseRealTime();
BENCHMARK(BM_GemmTN)->Apply(kernel_args)->UseRealTime();
BENCHMARK(BM_SegmentSum)->Apply(kernel_args)->UseRealTime();
BENCHMARK_CAPTURE(BM_Decode, grn, EncoderKind::grn)->Apply(decode_args)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Decode, dag, EncoderKind::dag)->Apply(decode_args)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
