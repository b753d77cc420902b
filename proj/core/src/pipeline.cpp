#include "genrank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "genrank/generator.hpp"
#include "genrank/gpe.hpp"
#include "genrank/rng.hpp"

namespace genrank {

namespace {

namespace fs = std::filesystem;

// Stream ids for per-stage rng forks.
constexpr uint64_t kStreamDistill = 1;
constexpr uint64_t kStreamEncoderTeacher = 2;

/// Writes through a `.partial` file and renames on success, so an aborted
/// stage leaves only the partial artifact behind.
void atomic_write(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
    fs::path partial = path;
    partial += ".partial";
    writer(partial);
    fs::rename(partial, path);
}

template <typename Fn>
auto guard_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const DataError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

struct Dataset {
    Corpus corpus;
    std::vector<Example> train;
    std::vector<Example> eval;
};

Dataset load_dataset(const PipelineConfig& cfg) {
    Dataset data;
    if (!cfg.corpus_path.empty()) {
        data.corpus = load_corpus(cfg.corpus_path);
        std::vector<Example> all = load_examples(cfg.examples_path);
        validate_provenance(data.corpus, all);
        auto [train, eval] = split_examples(all, cfg.train_fraction);
        data.train = std::move(train);
        data.eval = std::move(eval);
    } else {
        SyntheticData synth = make_synthetic(cfg.synth);
        data.corpus = std::move(synth.corpus);
        auto [train, eval] = split_examples(synth.examples, cfg.train_fraction);
        data.train = std::move(train);
        data.eval = std::move(eval);
    }
    return data;
}

Dataset load_dataset_artifacts(const fs::path& out) {
    Dataset data;
    data.corpus = load_corpus(out / artifacts::kCorpus);
    data.train = load_examples(out / artifacts::kTrainExamples);
    data.eval = load_examples(out / artifacts::kEvalExamples);
    return data;
}

InvertedIndex load_or_build_index(const Corpus& corpus, const fs::path& out) {
    uint64_t hash = corpus_content_hash(corpus);
    if (auto cached = InvertedIndex::load(out / artifacts::kIndex, hash)) return std::move(*cached);
    return InvertedIndex::build(corpus);
}

}  // namespace

std::pair<std::vector<Example>, std::vector<Example>> split_examples(
    const std::vector<Example>& examples, double train_fraction) {
    if (examples.size() < 2)
        throw DataError("need at least 2 examples to split into train and eval");
    size_t n_train = static_cast<size_t>(std::floor(train_fraction * static_cast<double>(examples.size())));
    n_train = std::clamp<size_t>(n_train, 1, examples.size() - 1);
    std::vector<Example> train(examples.begin(), examples.begin() + static_cast<long>(n_train));
    std::vector<Example> eval(examples.begin() + static_cast<long>(n_train), examples.end());
    return {std::move(train), std::move(eval)};
}

void stage_synth(const PipelineConfig& cfg, const fs::path& out) {
    guard_stage("synth", [&] {
        fs::create_directories(out);
        Dataset data = load_dataset(cfg);
        atomic_write(out / artifacts::kCorpus, [&](const fs::path& p) { save_corpus(p, data.corpus); });
        atomic_write(out / artifacts::kTrainExamples,
                     [&](const fs::path& p) { save_examples(p, data.train); });
        atomic_write(out / artifacts::kEvalExamples,
                     [&](const fs::path& p) { save_examples(p, data.eval); });
    });
}

void stage_index(const PipelineConfig& cfg, const fs::path& out) {
    (void)cfg;
    guard_stage("index", [&] {
        Corpus corpus = load_corpus(out / artifacts::kCorpus);
        uint64_t hash = corpus_content_hash(corpus);
        if (InvertedIndex::load(out / artifacts::kIndex, hash)) return;  // cache still valid
        InvertedIndex index = InvertedIndex::build(corpus);
        atomic_write(out / artifacts::kIndex, [&](const fs::path& p) { index.save(p); });
    });
}

void stage_train_gpe(const PipelineConfig& cfg, const fs::path& out) {
    guard_stage("train-gpe", [&] {
        Dataset data = load_dataset_artifacts(out);
        InvertedIndex index = load_or_build_index(data.corpus, out);
        ConditionalLM gpe = train_gpe(data.train, data.corpus, cfg.gpe_lm, &index);
        atomic_write(out / artifacts::kGpeModel, [&](const fs::path& p) { gpe.save(p); });
    });
}

void stage_distill(const PipelineConfig& cfg, const fs::path& out) {
    guard_stage("distill", [&] {
        if (!cfg.ranker_enabled) {
            fs::remove(out / artifacts::kRankerModel);
            return;
        }
        Dataset data = load_dataset_artifacts(out);
        InvertedIndex index = load_or_build_index(data.corpus, out);
        ConditionalLM gpe = ConditionalLM::load(out / artifacts::kGpeModel);

        Rng rng(cfg.seed);
        RankerModel encoder_teacher;
        const RankerModel* teacher_ptr = nullptr;
        if (cfg.train.objective == Objective::EncoderDistill) {
            Rng teacher_rng = rng.fork(kStreamEncoderTeacher);
            encoder_teacher = train_encoder_teacher(data.train, data.corpus, index, gpe,
                                                    cfg.schedule, cfg.train, teacher_rng);
            teacher_ptr = &encoder_teacher;
        }
        Rng train_rng = rng.fork(kStreamDistill);
        TrainResult result = train_ranker(RankerModel{}, data.train, data.corpus, index, gpe,
                                          cfg.schedule, cfg.train, train_rng, teacher_ptr);
        atomic_write(out / artifacts::kRankerModel,
                     [&](const fs::path& p) { save_ranker(p, result.model); });
    });
}

void stage_generate(const PipelineConfig& cfg, const fs::path& out) {
    guard_stage("generate", [&] {
        Dataset data = load_dataset_artifacts(out);
        InvertedIndex index = load_or_build_index(data.corpus, out);

        RankerModel model;
        const RankerModel* model_ptr = nullptr;
        if (cfg.ranker_enabled) {
            model = load_ranker(out / artifacts::kRankerModel);
            model_ptr = &model;
        }

        std::vector<CandidateList> train_rankings;
        train_rankings.reserve(data.train.size());
        for (const Example& ex : data.train)
            train_rankings.push_back(
                final_ranking(data.corpus, index, ex, model_ptr, cfg.retrieve_k));
        ConditionalLM generator =
            train_generator(data.train, data.corpus, train_rankings, cfg.generator_lm);
        atomic_write(out / artifacts::kGeneratorModel,
                     [&](const fs::path& p) { generator.save(p); });

        std::vector<PredictionRecord> predictions;
        predictions.reserve(data.eval.size());
        for (const Example& ex : data.eval) {
            CandidateList ranking = final_ranking(data.corpus, index, ex, model_ptr, cfg.retrieve_k);
            std::vector<std::string> query_tokens = tokenize(ex.query);
            std::vector<FusionContext> contexts;
            size_t take = std::min(cfg.decode.top_k_passages, ranking.size());
            for (size_t i = 0; i < take; ++i)
                contexts.push_back(encode_pair(query_tokens, data.corpus.at(ranking.entries[i].id)));

            PredictionRecord rec;
            rec.example_id = ex.id;
            rec.answer = contexts.empty() ? "" : fuse_and_decode(contexts, generator, cfg.decode);
            rec.ranked_ids.reserve(ranking.size());
            for (const ScoredId& e : ranking.entries) rec.ranked_ids.push_back(e.id);
            predictions.push_back(std::move(rec));
        }
        atomic_write(out / artifacts::kPredictions,
                     [&](const fs::path& p) { save_predictions(p, predictions); });
    });
}

MetricReport stage_eval(const PipelineConfig& cfg, const fs::path& out) {
    (void)cfg;
    return guard_stage("eval", [&] {
        std::vector<Example> eval = load_examples(out / artifacts::kEvalExamples);
        std::vector<PredictionRecord> predictions = load_predictions(out / artifacts::kPredictions);
        MetricReport report = evaluate_predictions(eval, predictions);
        atomic_write(out / artifacts::kReport, [&](const fs::path& p) { write_report(p, report); });
        return report;
    });
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& out) {
    cfg.validate();
    stage_synth(cfg, out);
    stage_index(cfg, out);
    stage_train_gpe(cfg, out);
    stage_distill(cfg, out);
    stage_generate(cfg, out);
    PipelineResult result;
    result.report = stage_eval(cfg, out);
    result.report_path = out / artifacts::kReport;
    return result;
}

std::vector<std::pair<std::string, MetricReport>> run_ablate(const PipelineConfig& cfg,
                                                             const fs::path& out) {
    struct Cell {
        std::string name;
        PipelineConfig config;
    };
    std::vector<Cell> cells;

    PipelineConfig noranker = cfg;
    noranker.ranker_enabled = false;
    cells.push_back({"noranker", noranker});

    PipelineConfig nll_only = cfg;
    nll_only.ranker_enabled = true;
    nll_only.train.objective = Objective::Nll;
    cells.push_back({"nll_" + strategy_name(nll_only.train.strategy), nll_only});

    for (Objective obj : {Objective::NllListMle, Objective::NllKld, Objective::EncoderDistill}) {
        for (SamplingStrategy strat :
             {SamplingStrategy::Cps, SamplingStrategy::Random, SamplingStrategy::TopN}) {
            PipelineConfig cell_cfg = cfg;
            cell_cfg.ranker_enabled = true;
            cell_cfg.train.objective = obj;
            cell_cfg.train.strategy = strat;
            std::string obj_name = objective_name(obj);
            std::replace(obj_name.begin(), obj_name.end(), '+', '-');
            cells.push_back({obj_name + "_" + strategy_name(strat), cell_cfg});
        }
    }

    fs::path grid_dir = out / "ablate";
    fs::create_directories(grid_dir);
    std::vector<std::pair<std::string, MetricReport>> results;
    for (const Cell& cell : cells) {
        fs::path cell_dir = grid_dir / cell.name;
        PipelineResult run = run_pipeline(cell.config, cell_dir);
        fs::copy_file(run.report_path, grid_dir / ("report_" + cell.name + ".txt"),
                      fs::copy_options::overwrite_existing);
        results.emplace_back(cell.name, std::move(run.report));
    }
    return results;
}

// ---------------------------------------------------------------------------
// In-memory helpers
// ---------------------------------------------------------------------------

BenchmarkRun prepare_benchmark(const PipelineConfig& cfg) {
    cfg.validate();
    Dataset data = load_dataset(cfg);
    BenchmarkRun run;
    run.index = InvertedIndex::build(data.corpus);
    run.gpe = train_gpe(data.train, data.corpus, cfg.gpe_lm, &run.index);
    run.corpus = std::move(data.corpus);
    run.train = std::move(data.train);
    run.eval = std::move(data.eval);
    return run;
}

RankerModel train_pipeline_ranker(const PipelineConfig& cfg, const BenchmarkRun& bench) {
    Rng rng(cfg.seed);
    RankerModel encoder_teacher;
    const RankerModel* teacher_ptr = nullptr;
    if (cfg.train.objective == Objective::EncoderDistill) {
        Rng teacher_rng = rng.fork(kStreamEncoderTeacher);
        encoder_teacher = train_encoder_teacher(bench.train, bench.corpus, bench.index, bench.gpe,
                                                cfg.schedule, cfg.train, teacher_rng);
        teacher_ptr = &encoder_teacher;
    }
    Rng train_rng = rng.fork(kStreamDistill);
    return train_ranker(RankerModel{}, bench.train, bench.corpus, bench.index, bench.gpe,
                        cfg.schedule, cfg.train, train_rng, teacher_ptr)
        .model;
}

CandidateList final_ranking(const Corpus& corpus, const InvertedIndex& index, const Example& ex,
                            const RankerModel* model, size_t retrieve_k) {
    std::vector<std::string> query_tokens = tokenize(ex.query);
    CandidateList retrieved = index.retrieve(query_tokens, retrieve_k, ex.id);
    if (!model) return retrieved;
    return rerank(*model, corpus, query_tokens, retrieved);
}

double mean_rprecision(const Corpus& corpus, const InvertedIndex& index,
                       const std::vector<Example>& examples, const RankerModel* model,
                       size_t retrieve_k) {
    if (examples.empty()) throw DataError("mean_rprecision: no examples");
    double total = 0.0;
    for (const Example& ex : examples) {
        CandidateList ranking = final_ranking(corpus, index, ex, model, retrieve_k);
        std::vector<std::string> ids;
        ids.reserve(ranking.size());
        for (const ScoredId& e : ranking.entries) ids.push_back(e.id);
        total += r_precision(ids, ex.gold_provenance);
    }
    return total / static_cast<double>(examples.size());
}

}  // namespace genrank
