// Acceptance suite. Runs every acceptance check at its stated tolerance and
// prints one pass/fail line per criterion; exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "genrank/generator.hpp"
#include "genrank/pipeline.hpp"
#include "genrank/rng.hpp"

using namespace genrank;

namespace {

struct CriterionResult {
    bool passed = true;
    std::string detail;
};

int failures = 0;

void run_criterion(int number, const std::string& name, double budget_seconds,
                   const std::function<CriterionResult()>& body) {
    auto start = std::chrono::steady_clock::now();
    CriterionResult result;
    try {
        result = body();
    } catch (const std::exception& e) {
        result.passed = false;
        result.detail = std::string("exception: ") + e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > budget_seconds) {
        result.passed = false;
        result.detail += (result.detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("%s criterion %d: %-28s (%.2fs / %.0fs)%s%s\n", result.passed ? "PASS" : "FAIL",
                number, name.c_str(), elapsed, budget_seconds, result.detail.empty() ? "" : " — ",
                result.detail.c_str());
    std::fflush(stdout);
    if (!result.passed) ++failures;
}

#define REQUIRE_OR_FAIL(cond, message)                 \
    do {                                               \
        if (!(cond)) return CriterionResult{false, message}; \
    } while (0)

// ---------------------------------------------------------------------------
// 1. Rectification suite
// ---------------------------------------------------------------------------

CriterionResult rectification_suite() {
    Rng rng(101);
    for (int trial = 0; trial < 10000; ++trial) {
        size_t n = 2 + rng.below(99);  // sizes 2..100
        std::vector<double> r;
        if (trial % 2 == 0) {
            // softmax of random ratio-style scores
            std::vector<double> z(n);
            for (double& v : z) v = rng.unit() * 8.0;
            r = softmax_scores(z);
        } else {
            r.resize(n);
            double total = 0.0;
            for (double& v : r) {
                v = rng.unit();
                total += v;
            }
            for (double& v : r) v /= total;
        }
        size_t gold = rng.below(n);

        double r_sum = 0.0;
        for (double v : r) r_sum += v;
        REQUIRE_OR_FAIL(std::abs(r_sum - 1.0) <= 1e-9, "input distribution does not sum to 1");

        auto [r_rect, eps] = rectify(r, gold);

        double rect_sum = 0.0;
        for (double v : r_rect) rect_sum += v;
        REQUIRE_OR_FAIL(std::abs(rect_sum - 1.0) <= 1e-9, "rectified distribution does not sum to 1");

        double m = 0.0;
        for (size_t i = 0; i < n; ++i)
            if (i != gold) m = std::max(m, r[i]);
        REQUIRE_OR_FAIL(std::abs(eps - (1.0 - eps) * m) <= 1e-12, "epsilon identity violated");

        for (size_t i = 0; i < n; ++i) {
            if (i == gold) continue;
            REQUIRE_OR_FAIL(r_rect[gold] >= r_rect[i], "gold not weakly maximal");
            if (r[gold] > 0.0)
                REQUIRE_OR_FAIL(r_rect[gold] > r_rect[i], "gold not strictly maximal");
        }
        for (size_t i = 0; i + 1 < n; ++i) {
            if (i == gold || i + 1 == gold) continue;
            if (r[i] < r[i + 1])
                REQUIRE_OR_FAIL(r_rect[i] <= r_rect[i + 1], "non-gold order not preserved");
            if (r[i] > r[i + 1])
                REQUIRE_OR_FAIL(r_rect[i] >= r_rect[i + 1], "non-gold order not preserved");
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// 2. Gradient suite
// ---------------------------------------------------------------------------

CriterionResult gradient_suite() {
    Rng rng(202);
    const double h = 1e-5;

    // One random instance per trial: scores plus whatever auxiliary input
    // (gold index, permutation, target distribution) the loss needs.
    auto check_instances = [&](const char* name, int loss_kind) -> CriterionResult {
        for (int trial = 0; trial < 100; ++trial) {
            size_t n = 2 + rng.below(7);
            std::vector<double> scores(n);
            for (double& s : scores) s = rng.unit() * 6.0 - 3.0;
            size_t gold = rng.below(n);
            std::vector<size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            std::vector<double> target(n);
            double sum = 0.0;
            for (double& v : target) {
                v = rng.unit() + 1e-3;
                sum += v;
            }
            for (double& v : target) v /= sum;

            auto loss = [&](const std::vector<double>& s) -> LossResult {
                switch (loss_kind) {
                    case 0: return nll_loss(s, gold);
                    case 1: return listmle_loss(s, order);
                    case 2: return kld_loss(s, target);
                    default: return combined_loss(s, gold, order);
                }
            };

            LossResult analytic = loss(scores);
            double scale = 1.0;
            std::vector<double> fd(n);
            for (size_t i = 0; i < n; ++i) {
                std::vector<double> up = scores, down = scores;
                up[i] += h;
                down[i] -= h;
                fd[i] = (loss(up).loss - loss(down).loss) / (2.0 * h);
                scale = std::max({scale, std::abs(fd[i]), std::abs(analytic.grad[i])});
            }
            for (size_t i = 0; i < n; ++i) {
                if (std::abs(analytic.grad[i] - fd[i]) > 1e-5 * scale)
                    return {false, std::string(name) + ": gradient mismatch"};
            }
        }
        return {};
    };

    for (auto [name, kind] : {std::pair<const char*, int>{"nll", 0}, {"listmle", 1}, {"kld", 2},
                              {"combined", 3}}) {
        CriterionResult r = check_instances(name, kind);
        if (!r.passed) return r;
    }
    return {};
}

// ---------------------------------------------------------------------------
// 3. ListMLE brute-force minimality
// ---------------------------------------------------------------------------

CriterionResult listmle_oracle() {
    Rng rng(404);
    int trials_per_size = 50;
    for (size_t n = 2; n <= 5; ++n) {
        for (int trial = 0; trial < trials_per_size; ++trial) {
            std::vector<double> scores(n);
            for (double& s : scores) s = rng.unit() * 10.0 - 5.0;
            // enforce distinctness
            std::sort(scores.begin(), scores.end());
            bool distinct = true;
            for (size_t i = 1; i < n; ++i) distinct &= (scores[i] - scores[i - 1] > 1e-9);
            if (!distinct) {
                --trial;
                continue;
            }
            rng.shuffle(scores);

            std::vector<size_t> descending(n);
            std::iota(descending.begin(), descending.end(), 0);
            std::sort(descending.begin(), descending.end(),
                      [&](size_t a, size_t b) { return scores[a] > scores[b]; });
            double best_loss = listmle_loss(scores, descending).loss;

            std::vector<size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::sort(perm.begin(), perm.end());
            do {
                if (perm == descending) continue;
                double loss = listmle_loss(scores, perm).loss;
                if (loss <= best_loss)
                    return {false, "a non-descending permutation did not increase the loss"};
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// 4. Curriculum schedule table
// ---------------------------------------------------------------------------

CriterionResult curriculum_table() {
    CurriculumSchedule schedule;  // N0 = 5, T0 = 500, T = 1000
    const size_t pool = 100;
    const std::pair<size_t, size_t> table[] = {{0, 5},    {500, 5},   {501, 5},
                                               {750, 52}, {1000, 100}, {1001, 100}};
    for (auto [t, expected] : table) {
        size_t got = curriculum_scale(t, schedule, pool);
        if (got != expected)
            return {false, "phi(" + std::to_string(t) + ") = " + std::to_string(got) +
                               ", expected " + std::to_string(expected)};
    }
    size_t prev = 0;
    for (size_t t = 0; t <= 2000; ++t) {
        size_t phi = curriculum_scale(t, schedule, pool);
        REQUIRE_OR_FAIL(phi >= prev, "phi not non-decreasing");
        REQUIRE_OR_FAIL(phi >= 5 && phi <= pool, "phi out of range");
        prev = phi;
    }
    // Nested sampling spaces: the CPS space at step t is the first phi(t)
    // entries of the difficulty-sorted pool, so phi(t1) <= phi(t2) makes
    // space(t1) a prefix of space(t2).
    for (size_t t1 = 0; t1 <= 2000; t1 += 50) {
        for (size_t t2 = t1; t2 <= 2000; t2 += 100) {
            REQUIRE_OR_FAIL(curriculum_scale(t1, schedule, pool) <=
                                curriculum_scale(t2, schedule, pool),
                            "sampling spaces not nested");
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// 5. Metric suite
// ---------------------------------------------------------------------------

CriterionResult metric_suite() {
    REQUIRE_OR_FAIL(normalize_answer("Image Universe") == "image universe", "normalize_answer");
    REQUIRE_OR_FAIL(normalize_answer("The  Flintlockers!") == "flintlockers", "normalize_answer");
    REQUIRE_OR_FAIL(exact_match("Image Universe", {"Image Universe"}) == 1.0, "em gold");
    REQUIRE_OR_FAIL(exact_match("Youngblood", {"Image Universe"}) == 0.0, "em wrong answer");
    REQUIRE_OR_FAIL(exact_match("the image universe", {"Image Universe"}) == 1.0, "em normalized");
    REQUIRE_OR_FAIL(std::abs(unigram_f1("gospel music", {"christian gospel music"}) - 0.8) < 1e-12,
                    "f1 hand value");
    REQUIRE_OR_FAIL(unigram_f1("x y", {"x y"}) == 1.0, "f1 identical");
    REQUIRE_OR_FAIL(unigram_f1("aa bb", {"cc dd"}) == 0.0, "f1 disjoint");
    REQUIRE_OR_FAIL(std::abs(rouge_l("the cat sat", "the cat ate") - 2.0 / 3.0) < 1e-12,
                    "rouge hand value");
    REQUIRE_OR_FAIL(rouge_l("same thing", "same thing") == 1.0, "rouge identical");
    REQUIRE_OR_FAIL(rouge_l("", "ref") == 0.0, "rouge empty");
    REQUIRE_OR_FAIL(r_precision({"g", "x"}, {"g"}) == 1.0, "rprec hit");
    REQUIRE_OR_FAIL(r_precision({"a", "b", "c", "g"}, {"g"}) == 0.0, "rprec rank 4");
    REQUIRE_OR_FAIL(recall_at_5({"a", "b", "c", "g"}, {"g"}) == 1.0, "recall@5 rank 4");
    REQUIRE_OR_FAIL(recall_at_5({"a", "b", "c", "d", "e", "g"}, {"g"}) == 0.0, "recall@5 rank 6");
    REQUIRE_OR_FAIL(kilt_variant(1.0, 0.0) == 0.0, "kilt gate");
    REQUIRE_OR_FAIL(kilt_variant(1.0, 1.0) == 1.0, "kilt pass-through");
    REQUIRE_OR_FAIL(kilt_variant(0.8, 1.0) == 0.8, "kilt scaled");

    // KILT <= base over 1,000 random records.
    Rng rng(505);
    const char* words[] = {"alpha", "beta", "gamma", "delta", "eps"};
    for (int rec = 0; rec < 1000; ++rec) {
        Example ex;
        ex.id = "e";
        ex.query = "q";
        ex.answers = {std::string(words[rng.below(5)]) + " " + words[rng.below(5)]};
        ex.gold_provenance = {"p" + std::to_string(rng.below(10))};
        PredictionRecord pred;
        pred.example_id = "e";
        pred.answer = std::string(words[rng.below(5)]) + " " + words[rng.below(5)];
        for (int r = 0; r < 10; ++r) pred.ranked_ids.push_back("p" + std::to_string(r));
        rng.shuffle(pred.ranked_ids);

        MetricReport report = evaluate_predictions({ex}, {pred});
        const ExampleMetrics& m = report.per_example[0];
        REQUIRE_OR_FAIL(m.kilt_em <= m.em && m.kilt_f1 <= m.f1 && m.kilt_accuracy <= m.accuracy &&
                            m.kilt_rouge_l <= m.rouge_l,
                        "kilt metric exceeded its base");
        REQUIRE_OR_FAIL(m.recall_at_5 >= m.r_precision, "recall@5 below r-precision");
    }
    return {};
}

// ---------------------------------------------------------------------------
// 6. Directional ablation reproduction
// ---------------------------------------------------------------------------

CriterionResult directional_ablation() {
    double mean_full = 0.0, mean_noranker = 0.0, mean_nll = 0.0, mean_topn = 0.0;
    const int n_seeds = 5;
    for (uint64_t seed = 1; seed <= n_seeds; ++seed) {
        PipelineConfig cfg;  // frozen benchmark defaults
        cfg.seed = seed;
        cfg.synth.seed = seed;
        cfg.train.retrieve_k = cfg.retrieve_k;
        BenchmarkRun bench = prepare_benchmark(cfg);

        auto variant = [&](Objective objective, SamplingStrategy strategy) {
            PipelineConfig v = cfg;
            v.train.objective = objective;
            v.train.strategy = strategy;
            RankerModel model = train_pipeline_ranker(v, bench);
            return mean_rprecision(bench.corpus, bench.index, bench.eval, &model, cfg.retrieve_k);
        };
        mean_full += variant(Objective::NllListMle, SamplingStrategy::Cps) / n_seeds;
        mean_nll += variant(Objective::Nll, SamplingStrategy::Cps) / n_seeds;
        mean_topn += variant(Objective::NllListMle, SamplingStrategy::TopN) / n_seeds;
        mean_noranker +=
            mean_rprecision(bench.corpus, bench.index, bench.eval, nullptr, cfg.retrieve_k) /
            n_seeds;
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf), "full %.3f, noranker %.3f, nll-only %.3f, topn %.3f", mean_full,
                  mean_noranker, mean_nll, mean_topn);
    CriterionResult result;
    result.detail = buf;
    if (!(mean_full > mean_noranker)) {
        result.passed = false;
        result.detail += "; (a) full <= noranker";
    }
    if (!(mean_full >= mean_nll)) {
        result.passed = false;
        result.detail += "; (b) nll+listmle < nll-only";
    }
    if (!(mean_full >= mean_topn)) {
        result.passed = false;
        result.detail += "; (c) cps < topn";
    }
    return result;
}

// ---------------------------------------------------------------------------
// 7. GPE ordering sanity
// ---------------------------------------------------------------------------

CriterionResult gpe_ordering_sanity() {
    PipelineConfig cfg;
    cfg.train.retrieve_k = cfg.retrieve_k;
    BenchmarkRun bench = prepare_benchmark(cfg);

    size_t gold_on_top = 0;
    for (const Example& ex : bench.train) {
        std::vector<std::string> query_tokens = tokenize(ex.query);
        CandidateList retrieved = bench.index.retrieve(query_tokens, cfg.retrieve_k, ex.id);
        std::string gold = designated_gold(ex, bench.index);

        std::vector<std::string> ids;
        size_t gold_index = retrieved.size();
        for (const ScoredId& e : retrieved.entries) {
            if (e.id == gold) gold_index = ids.size();
            ids.push_back(e.id);
        }
        if (gold_index == retrieved.size()) {
            ids.push_back(gold);  // retrieved below the cutoff; still scored
            gold_index = ids.size() - 1;
        }

        TeacherSignal signal = compute_teacher_signal(bench.gpe, ex.query, bench.corpus, ids,
                                                      ex.answers.front(), gold_index);
        if (signal.order[0] == signal.gold_index) ++gold_on_top;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "gold on top for %zu/%zu training queries", gold_on_top,
                  bench.train.size());
    bool ok = gold_on_top * 100 >= bench.train.size() * 95;
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism
// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CriterionResult pipeline_determinism() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "genrank_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    PipelineConfig cfg;  // frozen defaults, seed 7
    cfg.train.retrieve_k = cfg.retrieve_k;
    PipelineResult a = run_pipeline(cfg, dir / "a");
    PipelineResult b = run_pipeline(cfg, dir / "b");

    REQUIRE_OR_FAIL(slurp(a.report_path) == slurp(b.report_path), "reports differ");
    REQUIRE_OR_FAIL(!slurp(a.report_path).empty(), "report is empty");
    REQUIRE_OR_FAIL(slurp(dir / "a" / artifacts::kPredictions) ==
                        slurp(dir / "b" / artifacts::kPredictions),
                    "predictions differ");
    return {};
}

}  // namespace

int main() {
    std::printf("acceptance suite (frozen synthetic benchmark)\n");
    run_criterion(1, "rectification suite", 5.0, rectification_suite);
    run_criterion(2, "gradient suite", 10.0, gradient_suite);
    run_criterion(3, "listmle brute-force oracle", 10.0, listmle_oracle);
    run_criterion(4, "curriculum schedule table", 5.0, curriculum_table);
    run_criterion(5, "metric unit suite", 5.0, metric_suite);
    run_criterion(6, "directional ablation", 300.0, directional_ablation);
    run_criterion(7, "gpe ordering sanity", 30.0, gpe_ordering_sanity);
    run_criterion(8, "end-to-end determinism", 60.0, pipeline_determinism);

    if (failures) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
