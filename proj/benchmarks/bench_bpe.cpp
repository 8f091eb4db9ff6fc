#include <benchmark/benchmark.h>

#include "subalign/bpe.hpp"
#include "subalign/synthetic.hpp"

using namespace subalign;

namespace {

SyntheticBitext fixture(std::size_t sentences) {
  SyntheticConfig config;
  config.sentences = sentences;
  config.stems = 300;
  config.seed = 12;
  return generate_synthetic(config);
}

void BM_LearnBpe(benchmark::State& state) {
  const auto data = fixture(static_cast<std::size_t>(state.range(0)));
  const Bitext words = Bitext::from_corpus(data.corpus);
  for (auto _ : state) {
    benchmark::DoNotOptimize(learn_bpe(words.target, 50000));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.corpus.size()));
}
BENCHMARK(BM_LearnBpe)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_SegmentCorpus(benchmark::State& state) {
  const auto data = fixture(2000);
  const Bitext words = Bitext::from_corpus(data.corpus);
  const auto src_table = learn_bpe(words.source, 50000);
  const auto tgt_table = learn_bpe(words.target, 50000);
  const SegmentationScheme scheme{
      Granularity::merges(static_cast<std::uint32_t>(state.range(0))),
      Granularity::merges(static_cast<std::uint32_t>(state.range(0)))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_corpus(data.corpus, scheme, src_table, tgt_table));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.corpus.size()));
}
BENCHMARK(BM_SegmentCorpus)->Arg(50)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
