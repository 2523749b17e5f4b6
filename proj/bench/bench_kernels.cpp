// Serial reference path vs OpenMP kernel for the three hot loops.
// Arg 0 = serial, 1 = parallel; arg 1 is the problem size.

#include <benchmark/benchmark.h>

#include "smbr/clustering.hpp"
#include "smbr/corpus.hpp"
#include "smbr/engine.hpp"
#include "smbr/random.hpp"
#include "smbr/utility.hpp"

using namespace smbr;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

OutcomeSpace big_space(std::size_t n) {
  SynthConfig cfg;
  cfg.n_spaces = 1;
  cfg.min_clusters = 4;
  cfg.max_clusters = 4;
  cfg.candidates_per_cluster = n / 4;
  cfg.tokens_per_candidate = 40;
  return generate_synthetic(cfg).spaces.front();
}

void BM_UtilityMatrix(benchmark::State& state) {
  const auto space = big_space(static_cast<std::size_t>(state.range(1)));
  UtilityBackend backend;
  for (auto _ : state) benchmark::DoNotOptimize(build_utility_matrix(space, backend, exec_of(state)));
}

void BM_ExpectedUtilities(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  std::vector<float> v(n * n);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  const UtilityMatrix m(n, std::move(v), "external:bench");
  const std::vector<double> w(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(expected_utilities(m, w, true, nullptr, exec_of(state)));
}

void BM_Silhouette(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const std::size_t d = 64;
  Rng rng(2);
  std::vector<float> v(n * d);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  const EmbeddingSet e(n, d, std::move(v));
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 5;
  const auto a = ClusterAssignment::from_labels(labels, 5, ClusterAssignment::Source::kmeans);
  for (auto _ : state) benchmark::DoNotOptimize(silhouette(e, a, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_UtilityMatrix)->ArgsProduct({{0, 1}, {64, 256}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExpectedUtilities)->ArgsProduct({{0, 1}, {256, 2048}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Silhouette)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
