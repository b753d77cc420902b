#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "genrank/pipeline.hpp"
#include "genrank/ranker.hpp"

using namespace genrank;

namespace {

// Central finite differences over the loss value path.
std::vector<double> numeric_grad(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> scores, double h = 1e-5) {
    std::vector<double> g(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        double keep = scores[i];
        scores[i] = keep + h;
        double up = f(scores);
        scores[i] = keep - h;
        double down = f(scores);
        scores[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

void check_grad(const LossResult& result,
                const std::function<double(const std::vector<double>&)>& f,
                const std::vector<double>& scores) {
    auto fd = numeric_grad(f, scores);
    double scale = 1.0;
    for (size_t i = 0; i < fd.size(); ++i)
        scale = std::max({scale, std::abs(fd[i]), std::abs(result.grad[i])});
    for (size_t i = 0; i < fd.size(); ++i)
        CHECK(std::abs(result.grad[i] - fd[i]) <= 1e-5 * scale);
}

PipelineConfig small_benchmark_config(uint64_t seed) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.synth.seed = seed;
    cfg.synth.n_passages = 150;
    cfg.synth.n_queries = 20;
    cfg.synth.n_distractors_per_query = 3;
    cfg.synth.vocab_size = 120;
    cfg.retrieve_k = 20;
    cfg.train.retrieve_k = 20;
    cfg.train.steps = 400;
    cfg.schedule = CurriculumSchedule{5, 100, 200};
    return cfg;
}

}  // namespace

TEST_CASE("extract_features hand counts") {
    Passage p = Passage::make("p", "", "a b x");
    FeatureVector f = extract_features({"a", "b", "c"}, p, 0.25);
    CHECK(f[kFeatUnigramOverlap] == 2.0);
    CHECK(f[kFeatUnigramRatio] == doctest::Approx(2.0 / 3.0));
    CHECK(f[kFeatBigramOverlap] == 1.0);  // shared bigram "a b"
    CHECK(f[kFeatRetrieverScore] == 0.25);
    CHECK(f[kFeatLogLength] == doctest::Approx(std::log(4.0)));
    CHECK(f[kFeatBias] == 1.0);

    SUBCASE("passage equal to the query text") {
        Passage same = Passage::make("q", "", "a b c");
        FeatureVector fs = extract_features({"a", "b", "c"}, same, 0.0);
        CHECK(fs[kFeatUnigramRatio] == doctest::Approx(1.0));
        CHECK(fs[kFeatBigramOverlap] == 2.0);
    }
    SUBCASE("disjoint vocabularies") {
        Passage other = Passage::make("o", "", "z y w");
        FeatureVector fo = extract_features({"a", "b"}, other, 0.0);
        CHECK(fo[kFeatUnigramOverlap] == 0.0);
        CHECK(fo[kFeatUnigramRatio] == 0.0);
        CHECK(fo[kFeatBigramOverlap] == 0.0);
    }
    SUBCASE("empty query") {
        FeatureVector fe = extract_features({}, p, 0.0);
        CHECK(fe[kFeatUnigramRatio] == 0.0);
        for (double v : fe) CHECK(std::isfinite(v));
    }
}

TEST_CASE("linear score") {
    RankerModel zero;
    FeatureVector f{1.0, 2.0, 3.0, 4.0, 5.0, 1.0};
    CHECK(score(zero, f) == 0.0);

    RankerModel bias_only;
    bias_only.weights[kFeatBias] = 1.0;
    CHECK(score(bias_only, f) == 1.0);

    std::vector<double> w = {1.0, 2.0};
    std::vector<double> x = {3.0, 4.0};
    CHECK(score(std::span<const double>(w), std::span<const double>(x)) == 11.0);
    std::vector<double> bad = {1.0};
    CHECK_THROWS_AS(score(std::span<const double>(w), std::span<const double>(bad)), DataError);
}

TEST_CASE("nll_loss hand values") {
    auto uniform = nll_loss({0.0, 0.0, 0.0}, 0);
    CHECK(uniform.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    auto single = nll_loss({4.2}, 0);
    CHECK(single.loss == doctest::Approx(0.0));
    CHECK(single.grad[0] == doctest::Approx(0.0));

    auto easy = nll_loss({10.0, 0.0}, 0);
    CHECK(easy.loss == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
    CHECK(easy.loss == doctest::Approx(4.5398899216870535e-05).epsilon(1e-6));

    CHECK_THROWS_AS(nll_loss({1.0}, 3), DataError);
}

TEST_CASE("listmle_loss hand values") {
    auto single = listmle_loss({2.5}, {0});
    CHECK(single.loss == doctest::Approx(0.0));

    auto two = listmle_loss({2.0, 1.0}, {0, 1});
    CHECK(two.loss == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
    CHECK(two.loss == doctest::Approx(0.31326168751822286).epsilon(1e-9));

    for (auto o : {std::vector<size_t>{0, 1, 2}, std::vector<size_t>{2, 0, 1},
                   std::vector<size_t>{1, 2, 0}}) {
        auto flat = listmle_loss({0.0, 0.0, 0.0}, o);
        CHECK(flat.loss == doctest::Approx(std::log(3.0) + std::log(2.0)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(listmle_loss({1.0, 2.0}, {0}), DataError);
    CHECK_THROWS_AS(listmle_loss({1.0, 2.0}, {0, 0}), DataError);
    CHECK_THROWS_AS(listmle_loss({1.0, 2.0}, {0, 2}), DataError);
}

TEST_CASE("kld_loss hand values and the one-hot reduction") {
    auto matched = kld_loss({1.0, 1.0}, {0.5, 0.5});
    CHECK(matched.loss == doctest::Approx(0.0).epsilon(1e-12));

    auto hand = kld_loss({0.0, 0.0}, {0.75, 0.25});
    CHECK(hand.loss == doctest::Approx(0.13081203594113694).epsilon(1e-9));

    std::vector<double> scores = {0.3, -1.2, 2.0};
    for (size_t k = 0; k < scores.size(); ++k) {
        std::vector<double> onehot(scores.size(), 0.0);
        onehot[k] = 1.0;
        auto kld = kld_loss(scores, onehot);
        auto nll = nll_loss(scores, k);
        CHECK(std::abs(kld.loss - nll.loss) <= 1e-9);
    }

    CHECK_THROWS_AS(kld_loss({1.0}, {0.5, 0.5}), DataError);
}

TEST_CASE("combined_loss sums its components") {
    auto single = combined_loss({1.0}, 0, {0});
    CHECK(single.loss == doctest::Approx(0.0));

    auto both = combined_loss({2.0, 1.0}, 0, {0, 1});
    CHECK(both.loss == doctest::Approx(2.0 * 0.31326168751822286).epsilon(1e-9));

    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 2 + rng.below(6);
        std::vector<double> scores(n);
        for (double& s : scores) s = rng.unit() * 4 - 2;
        size_t gold = rng.below(n);
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        auto combined = combined_loss(scores, gold, order);
        auto nll = nll_loss(scores, gold);
        auto lml = listmle_loss(scores, order);
        CHECK(combined.loss == doctest::Approx(nll.loss + lml.loss).epsilon(1e-12));
        for (size_t i = 0; i < n; ++i)
            CHECK(combined.grad[i] == doctest::Approx(nll.grad[i] + lml.grad[i]).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        size_t n = 2 + rng.below(6);
        std::vector<double> scores(n);
        for (double& s : scores) s = rng.unit() * 6 - 3;
        size_t gold = rng.below(n);
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<double> target(n);
        double sum = 0;
        for (double& t : target) {
            t = rng.unit() + 1e-3;
            sum += t;
        }
        for (double& t : target) t /= sum;

        check_grad(nll_loss(scores, gold),
                   [&](const std::vector<double>& s) { return nll_loss(s, gold).loss; }, scores);
        check_grad(listmle_loss(scores, order),
                   [&](const std::vector<double>& s) { return listmle_loss(s, order).loss; },
                   scores);
        check_grad(kld_loss(scores, target),
                   [&](const std::vector<double>& s) { return kld_loss(s, target).loss; }, scores);
        check_grad(combined_loss(scores, gold, order),
                   [&](const std::vector<double>& s) { return combined_loss(s, gold, order).loss; },
                   scores);
    }
}

TEST_CASE("curriculum_scale follows the schedule") {
    CurriculumSchedule schedule;  // N0=5, T0=500, T=1000
    CHECK(curriculum_scale(0, schedule, 100) == 5);
    CHECK(curriculum_scale(100, schedule, 100) == 5);
    CHECK(curriculum_scale(500, schedule, 100) == 5);
    CHECK(curriculum_scale(501, schedule, 100) == 5);
    CHECK(curriculum_scale(750, schedule, 100) == 52);
    CHECK(curriculum_scale(1000, schedule, 100) == 100);
    CHECK(curriculum_scale(1001, schedule, 100) == 100);

    SUBCASE("non-decreasing and bounded") {
        size_t prev = 0;
        for (size_t t = 0; t <= 2000; ++t) {
            size_t phi = curriculum_scale(t, schedule, 100);
            CHECK(phi >= prev);
            CHECK(phi >= 5);
            CHECK(phi <= 100);
            prev = phi;
        }
        CHECK(curriculum_scale(schedule.warmup_steps, schedule, 100) == schedule.warmup_pool);
    }
    SUBCASE("pool smaller than the warm-up scale clamps") {
        CHECK(curriculum_scale(0, schedule, 3) == 3);
        CHECK(curriculum_scale(2000, schedule, 3) == 3);
    }
    SUBCASE("schedule validation") {
        CHECK_THROWS_AS((CurriculumSchedule{0, 10, 20}.validate()), ConfigError);
        CHECK_THROWS_AS((CurriculumSchedule{5, 20, 20}.validate()), ConfigError);
    }
}

TEST_CASE("sample_candidates strategies") {
    CandidateList pool;
    for (int i = 0; i < 10; ++i)
        pool.entries.push_back({"p" + std::to_string(i), 0.05 * i});
    Rng rng(42);

    SUBCASE("cps with scale equal to n takes exactly the easiest entries") {
        auto picked = sample_candidates(pool, 5, 5, SamplingStrategy::Cps, rng);
        CHECK(picked == std::vector<size_t>{0, 1, 2, 3, 4});
    }
    SUBCASE("topn takes the hardest entries") {
        auto picked = sample_candidates(pool, 5, 2, SamplingStrategy::TopN, rng);
        CHECK(picked == std::vector<size_t>{8, 9});
    }
    SUBCASE("cps samples are reproducible under the same seed") {
        Rng a(7), b(7);
        auto first = sample_candidates(pool, 8, 5, SamplingStrategy::Cps, a);
        auto second = sample_candidates(pool, 8, 5, SamplingStrategy::Cps, b);
        CHECK(first == second);
        for (size_t idx : first) CHECK(idx < 8);  // inside the scaled space
        std::set<size_t> uniq(first.begin(), first.end());
        CHECK(uniq.size() == first.size());
    }
    SUBCASE("cps fills deterministically when n exceeds the scale") {
        auto picked = sample_candidates(pool, 3, 6, SamplingStrategy::Cps, rng);
        REQUIRE(picked.size() == 6);
        CHECK(picked == std::vector<size_t>{0, 1, 2, 3, 4, 5});
    }
    SUBCASE("random draws distinct indices from the whole pool") {
        auto picked = sample_candidates(pool, 3, 7, SamplingStrategy::Random, rng);
        std::set<size_t> uniq(picked.begin(), picked.end());
        CHECK(uniq.size() == 7);
    }
    SUBCASE("n larger than the pool is an error") {
        CHECK_THROWS_AS(sample_candidates(pool, 5, 11, SamplingStrategy::Random, rng), DataError);
    }
}

TEST_CASE("assemble_batch appends exactly one designated gold") {
    CandidateList pool;
    for (int i = 0; i < 6; ++i) pool.entries.push_back({"n" + std::to_string(i), 0.1 * i});
    std::vector<size_t> negatives = {0, 2, 5};
    TrainingBatch batch = assemble_batch(pool, negatives, "gold");
    REQUIRE(batch.passage_ids.size() == 4);
    CHECK(batch.passage_ids.back() == "gold");
    CHECK(batch.gold_pos == 3);
    std::set<std::string> uniq(batch.passage_ids.begin(), batch.passage_ids.end());
    CHECK(uniq.size() == batch.passage_ids.size());
}

TEST_CASE("encoder teacher distribution") {
    Corpus corpus;
    corpus.add(Passage::make("a", "", "same text"));
    corpus.add(Passage::make("b", "", "same text"));
    std::vector<std::string> ids = {"a", "b"};
    std::vector<double> norm = {0.5, 0.5};

    RankerModel zero;
    auto uniform = encoder_teacher_scores(zero, "query", "answer", corpus, ids, norm);
    CHECK(uniform[0] == doctest::Approx(0.5));
    CHECK(uniform[1] == doctest::Approx(0.5));

    RankerModel trained;
    trained.weights[kFeatUnigramOverlap] = 1.0;
    auto still_uniform = encoder_teacher_scores(trained, "query", "answer", corpus, ids, norm);
    CHECK(still_uniform[0] == doctest::Approx(0.5));  // identical candidates
}

TEST_CASE("the answer-aware teacher prefers the answer-bearing passage") {
    PipelineConfig cfg = small_benchmark_config(3);
    BenchmarkRun bench = prepare_benchmark(cfg);
    Rng rng(99);
    RankerModel teacher = train_encoder_teacher(bench.train, bench.corpus, bench.index, bench.gpe,
                                                cfg.schedule, cfg.train, rng);

    size_t teacher_prefers_gold = 0;
    for (const Example& ex : bench.train) {
        std::vector<std::string> query_tokens = tokenize(ex.query);
        CandidateList retrieved = bench.index.retrieve(query_tokens, 10, ex.id);
        std::string gold = designated_gold(ex, bench.index);
        bool present = false;
        for (const ScoredId& e : retrieved.entries) present |= (e.id == gold);
        if (!present)
            retrieved.entries.push_back({gold, bench.index.score_passage(query_tokens, gold)});

        std::vector<double> norm = normalize_scores(retrieved);
        std::vector<std::string> ids;
        for (const ScoredId& e : retrieved.entries) ids.push_back(e.id);
        std::vector<double> dist =
            encoder_teacher_scores(teacher, ex.query, ex.answers.front(), bench.corpus, ids, norm);
        size_t argmax = std::max_element(dist.begin(), dist.end()) - dist.begin();
        if (ids[argmax] == gold) ++teacher_prefers_gold;
    }
    // The teacher sees the answer, and only the gold passage contains it.
    CHECK(teacher_prefers_gold * 10 >= bench.train.size() * 8);
}

TEST_CASE("rerank returns a score-sorted permutation of its input") {
    Corpus corpus;
    corpus.add(Passage::make("b", "", "match one two"));
    corpus.add(Passage::make("a", "", "no overlap here"));
    corpus.add(Passage::make("c", "", "match match extra"));
    CandidateList candidates{"q", {{"a", 1.0}, {"b", 0.5}, {"c", 0.2}}};

    SUBCASE("zero-weight model falls back to ascending id order") {
        RankerModel zero;
        CandidateList out = rerank(zero, corpus, {"match"}, candidates);
        REQUIRE(out.size() == 3);
        CHECK(out.entries[0].id == "a");
        CHECK(out.entries[1].id == "b");
        CHECK(out.entries[2].id == "c");
    }
    SUBCASE("single candidate is unchanged") {
        CandidateList one{"q", {{"a", 1.0}}};
        RankerModel model;
        model.weights[kFeatUnigramOverlap] = 2.0;
        CandidateList out = rerank(model, corpus, {"match"}, one);
        REQUIRE(out.size() == 1);
        CHECK(out.entries[0].id == "a");
    }
    SUBCASE("overlap-weighted model promotes matching passages") {
        RankerModel model;
        model.weights[kFeatUnigramOverlap] = 1.0;
        CandidateList out = rerank(model, corpus, {"match"}, candidates);
        // b and c both overlap once; the tie resolves by ascending id, a sinks.
        CHECK(out.entries[0].id == "b");
        CHECK(out.entries[1].id == "c");
        CHECK(out.entries[2].id == "a");
    }
}

TEST_CASE("rerank permutation and translation-covariance properties") {
    Rng rng(77);
    Corpus corpus;
    const char* words[] = {"red", "green", "blue", "tall", "short", "fast"};
    for (int i = 0; i < 25; ++i) {
        std::string text;
        for (int j = 0; j < 5; ++j) text += std::string(words[rng.below(6)]) + " ";
        corpus.add(Passage::make("p" + std::to_string(i), "", text));
    }
    InvertedIndex index = InvertedIndex::build(corpus);

    RankerModel model;
    for (double& w : model.weights) w = rng.unit() * 2 - 1;
    RankerModel shifted = model;
    shifted.weights[kFeatBias] += 3.75;

    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> query = {words[rng.below(6)], words[rng.below(6)]};
        CandidateList candidates = index.retrieve(query, 12);
        CandidateList out = rerank(model, corpus, query, candidates);

        REQUIRE(out.size() == candidates.size());
        std::set<std::string> in_ids, out_ids;
        for (const ScoredId& e : candidates.entries) in_ids.insert(e.id);
        for (const ScoredId& e : out.entries) out_ids.insert(e.id);
        CHECK(in_ids == out_ids);
        for (size_t i = 1; i < out.size(); ++i)
            CHECK(out.entries[i - 1].score >= out.entries[i].score);

        // Shifting the bias weight moves every score equally: order unchanged.
        CandidateList out_shifted = rerank(shifted, corpus, query, candidates);
        for (size_t i = 0; i < out.size(); ++i)
            CHECK(out.entries[i].id == out_shifted.entries[i].id);
    }
}

TEST_CASE("train_ranker with zero steps returns the initial model") {
    PipelineConfig cfg = small_benchmark_config(11);
    BenchmarkRun bench = prepare_benchmark(cfg);
    RankerModel init;
    init.weights[kFeatBigramOverlap] = 0.5;
    TrainOptions options = cfg.train;
    options.steps = 0;
    Rng rng(1);
    TrainResult result = train_ranker(init, bench.train, bench.corpus, bench.index, bench.gpe,
                                      cfg.schedule, options, rng);
    CHECK(result.model.weights == init.weights);
    CHECK(result.step_losses.empty());
}

TEST_CASE("training loss trends downward on the synthetic benchmark") {
    PipelineConfig cfg = small_benchmark_config(11);
    BenchmarkRun bench = prepare_benchmark(cfg);
    Rng rng(2);
    TrainResult result = train_ranker(RankerModel{}, bench.train, bench.corpus, bench.index,
                                      bench.gpe, cfg.schedule, cfg.train, rng);
    REQUIRE(result.step_losses.size() == cfg.train.steps);
    size_t tenth = cfg.train.steps / 10;
    double first = 0.0, last = 0.0;
    for (size_t i = 0; i < tenth; ++i) {
        first += result.step_losses[i] / static_cast<double>(tenth);
        last += result.step_losses[result.step_losses.size() - 1 - i] / static_cast<double>(tenth);
    }
    CHECK(last < first);
}

TEST_CASE("train_ranker is deterministic given the seed") {
    PipelineConfig cfg = small_benchmark_config(11);
    BenchmarkRun bench = prepare_benchmark(cfg);
    Rng rng_a(5), rng_b(5);
    TrainResult a = train_ranker(RankerModel{}, bench.train, bench.corpus, bench.index, bench.gpe,
                                 cfg.schedule, cfg.train, rng_a);
    TrainResult b = train_ranker(RankerModel{}, bench.train, bench.corpus, bench.index, bench.gpe,
                                 cfg.schedule, cfg.train, rng_b);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.step_losses == b.step_losses);
}

TEST_CASE("distillation beats the plain retriever order on held-out queries") {
    PipelineConfig cfg = small_benchmark_config(19);
    BenchmarkRun bench = prepare_benchmark(cfg);
    RankerModel model = train_pipeline_ranker(cfg, bench);
    double with_ranker =
        mean_rprecision(bench.corpus, bench.index, bench.eval, &model, cfg.retrieve_k);
    double without =
        mean_rprecision(bench.corpus, bench.index, bench.eval, nullptr, cfg.retrieve_k);
    CHECK(with_ranker > without);
}

TEST_CASE("encoder objective requires a teacher model") {
    PipelineConfig cfg = small_benchmark_config(11);
    BenchmarkRun bench = prepare_benchmark(cfg);
    TrainOptions options = cfg.train;
    options.objective = Objective::EncoderDistill;
    Rng rng(1);
    CHECK_THROWS_AS(train_ranker(RankerModel{}, bench.train, bench.corpus, bench.index, bench.gpe,
                                 cfg.schedule, options, rng, nullptr),
                    ConfigError);
}

TEST_CASE("ranker model serialization is bit-exact") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "genrank_ranker_tests";
    fs::create_directories(dir);
    fs::path path = dir / "ranker.model";

    RankerModel model;
    model.weights = {0.1234567890123456, -2.5, 1e-17, 3.0, -0.0078125, 42.0};
    save_ranker(path, model);
    RankerModel loaded = load_ranker(path);
    CHECK(loaded.weights == model.weights);

    fs::path bad = dir / "bad.model";
    std::ofstream(bad) << "genrank-ranker 1\nunigram_overlap = 1.0\n";
    CHECK_THROWS_AS(load_ranker(bad), DataError);  // missing weights
}
