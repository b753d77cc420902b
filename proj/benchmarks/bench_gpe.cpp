#include <benchmark/benchmark.h>

#include "genrank/gpe.hpp"
#include "genrank/pipeline.hpp"

namespace {

const genrank::BenchmarkRun& shared_benchmark() {
    static genrank::BenchmarkRun bench = [] {
        genrank::PipelineConfig cfg;
        cfg.train.retrieve_k = cfg.retrieve_k;
        return genrank::prepare_benchmark(cfg);
    }();
    return bench;
}

}  // namespace

static void BM_AnswerLogprob(benchmark::State& state) {
    const auto& bench = shared_benchmark();
    const auto& ex = bench.train.front();
    const auto& passage = bench.corpus.at(ex.gold_provenance.front());
    for (auto _ : state) {
        double lp = genrank::answer_logprob(bench.gpe, ex.query, passage, ex.answers.front());
        benchmark::DoNotOptimize(lp);
    }
}
BENCHMARK(BM_AnswerLogprob);

static void BM_TeacherSignal(benchmark::State& state) {
    const auto& bench = shared_benchmark();
    const auto& ex = bench.train.front();
    auto retrieved = bench.index.retrieve(genrank::tokenize(ex.query),
                                          static_cast<size_t>(state.range(0)), ex.id);
    std::vector<std::string> ids;
    for (const auto& e : retrieved.entries) ids.push_back(e.id);
    for (auto _ : state) {
        auto signal = genrank::compute_teacher_signal(bench.gpe, ex.query, bench.corpus, ids,
                                                      ex.answers.front(), 0);
        benchmark::DoNotOptimize(signal.order.data());
    }
}
BENCHMARK(BM_TeacherSignal)->Arg(6)->Arg(15)->Arg(30);
