#include <benchmark/benchmark.h>

#include "subalign/aligner.hpp"
#include "subalign/linkops.hpp"
#include "subalign/synthetic.hpp"

using namespace subalign;

namespace {

Bitext fixture_bitext(std::size_t sentences) {
  SyntheticConfig config;
  config.sentences = sentences;
  config.stems = 300;
  config.seed = 21;
  return Bitext::from_corpus(generate_synthetic(config).corpus);
}

void BM_TrainModel1(benchmark::State& state) {
  const Bitext bitext = fixture_bitext(static_cast<std::size_t>(state.range(0)));
  AlignerConfig config;
  config.model1_iterations = 5;
  config.model2_iterations = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model1(bitext, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainModel1)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_BidirectionalPipeline(benchmark::State& state) {
  const Bitext bitext = fixture_bitext(static_cast<std::size_t>(state.range(0)));
  AlignerConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(align_bidirectional(bitext, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BidirectionalPipeline)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Symmetrize(benchmark::State& state) {
  const Bitext bitext = fixture_bitext(2000);
  AlignerConfig config;
  config.model1_iterations = 3;
  config.model2_iterations = 2;
  const auto bi = align_bidirectional(bitext, config);
  const auto method = static_cast<SymmetrizationMethod>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(symmetrize(bi.forward, bi.reverse, method));
  }
}
BENCHMARK(BM_Symmetrize)
    ->Arg(static_cast<int>(SymmetrizationMethod::kIntersection))
    ->Arg(static_cast<int>(SymmetrizationMethod::kGrowDiagFinalAnd))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
