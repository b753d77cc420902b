#include <benchmark/benchmark.h>

#include "genrank/corpus.hpp"
#include "genrank/ranker.hpp"
#include "genrank/retriever.hpp"

namespace {

genrank::SyntheticData benchmark_data(size_t n_passages) {
    genrank::SynthConfig cfg;
    cfg.n_passages = n_passages;
    cfg.n_queries = std::max<size_t>(10, n_passages / 8);
    cfg.seed = 42;
    return genrank::make_synthetic(cfg);
}

}  // namespace

static void BM_BuildIndex(benchmark::State& state) {
    auto data = benchmark_data(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto index = genrank::InvertedIndex::build(data.corpus);
        benchmark::DoNotOptimize(index.n_docs());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildIndex)->Range(256, 4096)->Complexity();

static void BM_Retrieve(benchmark::State& state) {
    auto data = benchmark_data(static_cast<size_t>(state.range(0)));
    auto index = genrank::InvertedIndex::build(data.corpus);
    size_t q = 0;
    for (auto _ : state) {
        const auto& ex = data.examples[q++ % data.examples.size()];
        auto result = index.retrieve(genrank::tokenize(ex.query), 30, ex.id);
        benchmark::DoNotOptimize(result.entries.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Retrieve)->Range(256, 4096)->Complexity();

static void BM_Rerank(benchmark::State& state) {
    auto data = benchmark_data(1024);
    auto index = genrank::InvertedIndex::build(data.corpus);
    genrank::RankerModel model;
    model.weights = {0.5, 0.1, 2.0, 0.7, -0.2, 0.0};
    size_t q = 0;
    for (auto _ : state) {
        const auto& ex = data.examples[q++ % data.examples.size()];
        auto query_tokens = genrank::tokenize(ex.query);
        auto candidates = index.retrieve(query_tokens, static_cast<size_t>(state.range(0)), ex.id);
        auto reranked = genrank::rerank(model, data.corpus, query_tokens, candidates);
        benchmark::DoNotOptimize(reranked.entries.data());
    }
}
BENCHMARK(BM_Rerank)->Arg(10)->Arg(30)->Arg(100);
