#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "genrank/ranker.hpp"
#include "genrank/rng.hpp"

namespace {

struct LossInputs {
    std::vector<double> scores;
    std::vector<size_t> order;
    std::vector<double> target;
};

LossInputs make_inputs(size_t n) {
    genrank::Rng rng(7);
    LossInputs in;
    in.scores.resize(n);
    for (double& s : in.scores) s = rng.unit() * 4 - 2;
    in.order.resize(n);
    std::iota(in.order.begin(), in.order.end(), 0);
    rng.shuffle(in.order);
    in.target.resize(n);
    double sum = 0;
    for (double& t : in.target) {
        t = rng.unit() + 1e-3;
        sum += t;
    }
    for (double& t : in.target) t /= sum;
    return in;
}

}  // namespace

static void BM_NllLoss(benchmark::State& state) {
    LossInputs in = make_inputs(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto result = genrank::nll_loss(in.scores, 0);
        benchmark::DoNotOptimize(result.grad.data());
    }
}
BENCHMARK(BM_NllLoss)->Arg(6)->Arg(32)->Arg(128);

static void BM_ListMleLoss(benchmark::State& state) {
    LossInputs in = make_inputs(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto result = genrank::listmle_loss(in.scores, in.order);
        benchmark::DoNotOptimize(result.grad.data());
    }
}
BENCHMARK(BM_ListMleLoss)->Arg(6)->Arg(32)->Arg(128);

static void BM_KldLoss(benchmark::State& state) {
    LossInputs in = make_inputs(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto result = genrank::kld_loss(in.scores, in.target);
        benchmark::DoNotOptimize(result.grad.data());
    }
}
BENCHMARK(BM_KldLoss)->Arg(6)->Arg(32)->Arg(128);
