#include <benchmark/benchmark.h>

#include "genrank/generator.hpp"
#include "genrank/pipeline.hpp"

namespace {

struct DecodeFixture {
    genrank::ConditionalLM generator;
    std::vector<genrank::FusionContext> contexts;
};

const DecodeFixture& shared_fixture() {
    static DecodeFixture fixture = [] {
        genrank::PipelineConfig cfg;
        cfg.train.retrieve_k = cfg.retrieve_k;
        genrank::BenchmarkRun bench = genrank::prepare_benchmark(cfg);

        std::vector<genrank::CandidateList> rankings;
        for (const auto& ex : bench.train)
            rankings.push_back(
                genrank::final_ranking(bench.corpus, bench.index, ex, nullptr, cfg.retrieve_k));
        DecodeFixture f{genrank::train_generator(bench.train, bench.corpus, rankings,
                                                 cfg.generator_lm),
                        {}};
        const auto& ex = bench.eval.front();
        auto ranking = genrank::final_ranking(bench.corpus, bench.index, ex, nullptr, 15);
        auto query_tokens = genrank::tokenize(ex.query);
        for (const auto& entry : ranking.entries)
            f.contexts.push_back(genrank::encode_pair(query_tokens, bench.corpus.at(entry.id)));
        return f;
    }();
    return fixture;
}

}  // namespace

static void BM_FuseAndDecode(benchmark::State& state) {
    const DecodeFixture& fixture = shared_fixture();
    genrank::DecodeConfig cfg;
    cfg.beam_size = static_cast<size_t>(state.range(0));
    cfg.max_len = 8;
    for (auto _ : state) {
        std::string answer = genrank::fuse_and_decode(fixture.contexts, fixture.generator, cfg);
        benchmark::DoNotOptimize(answer.data());
    }
}
BENCHMARK(BM_FuseAndDecode)->Arg(1)->Arg(3)->Arg(8);

static void BM_EncodePair(benchmark::State& state) {
    const DecodeFixture& fixture = shared_fixture();
    (void)fixture;
    genrank::Passage p = genrank::Passage::make("p", "", "one two three four five six seven");
    std::vector<std::string> query = {"three", "nine"};
    for (auto _ : state) {
        auto ctx = genrank::encode_pair(query, p);
        benchmark::DoNotOptimize(ctx.bag.total);
    }
}
BENCHMARK(BM_EncodePair);
