// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <memory>

#include "oracles.hpp"
#include "pti/count_table.hpp"
#include "pti/eval.hpp"
#include "pti/index.hpp"
#include "pti/scorer.hpp"

using namespace pti;

namespace {

const Corpus& corpus() {
  static const Corpus c = generate_synthetic(20000, 200000, "abcdefghijklmnopqrstuvwxyz", 42);
  return c;
}

const std::shared_ptr<const PtiIndex>& index() {
  static const auto i = std::make_shared<const PtiIndex>(
      build_index(CountTable(TokenizerConfig{}), count_cooccurrences(corpus(), TokenizerConfig{}), 1.0));
  return i;
}

void BM_CountSerial(benchmark::State& state) {
  corpus();
  for (auto _ : state) benchmark::DoNotOptimize(count_cooccurrences_serial(corpus(), TokenizerConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().distinct_pairs()));
}
BENCHMARK(BM_CountSerial)->Unit(benchmark::kMillisecond);

void BM_CountParallel(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  corpus();
  for (auto _ : state) benchmark::DoNotOptimize(count_cooccurrences(corpus(), TokenizerConfig{}, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().distinct_pairs()));
}
BENCHMARK(BM_CountParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BuildIndex(benchmark::State& state) {
  const CountTable counts = count_cooccurrences(corpus(), TokenizerConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(build_index(CountTable(TokenizerConfig{}), counts, 1.0));
}
BENCHMARK(BM_BuildIndex)->Unit(benchmark::kMillisecond);

void BM_TopKHeap(benchmark::State& state) {
  const auto& pairs = corpus().pairs();
  index();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& mention = pairs[i++ % pairs.size()].mention;
    benchmark::DoNotOptimize(top_k(score_entities(*index(), mention, 0.4), kDefaultK));
  }
}
BENCHMARK(BM_TopKHeap)->Unit(benchmark::kMicrosecond);

void BM_TopKBruteForce(benchmark::State& state) {
  const auto& pairs = corpus().pairs();
  index();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& mention = pairs[i++ % pairs.size()].mention;
    benchmark::DoNotOptimize(oracle::brute_force_top_k(*index(), mention, 0.4, kDefaultK));
  }
}
BENCHMARK(BM_TopKBruteForce)->Unit(benchmark::kMicrosecond);

void BM_Recall(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  std::vector<Query> queries;
  for (const auto& pair : corpus().pairs().subspan(0, 2000)) queries.push_back({pair.mention, pair.entity});
  const PtiGenerator generator(index(), 0.4);
  const CandidateGenerator call = [&](const std::string& m, std::size_t k) { return generator(m, k); };
  for (auto _ : state) benchmark::DoNotOptimize(recall_at_k(call, queries, kDefaultK));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.size()));
}
BENCHMARK(BM_Recall)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
