#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "genrank/config.hpp"
#include "genrank/metrics.hpp"

namespace genrank {

// Artifact filenames within the output directory. Stage failures leave the
// artifact being written behind with a `.partial` suffix.
namespace artifacts {
inline constexpr const char* kCorpus = "corpus.tsv";
inline constexpr const char* kTrainExamples = "train.jsonl";
inline constexpr const char* kEvalExamples = "eval.jsonl";
inline constexpr const char* kIndex = "index.txt";
inline constexpr const char* kGpeModel = "gpe.model";
inline constexpr const char* kRankerModel = "ranker.model";
inline constexpr const char* kGeneratorModel = "generator.model";
inline constexpr const char* kPredictions = "predictions.tsv";
inline constexpr const char* kReport = "report.txt";
}  // namespace artifacts

/// First floor(train_fraction * n) examples train, the rest evaluate
/// (clamped so both splits are non-empty; requires n >= 2).
std::pair<std::vector<Example>, std::vector<Example>> split_examples(
    const std::vector<Example>& examples, double train_fraction);

// Individual stages; each reads its inputs from `out` and writes its
// artifacts there. Exceptions other than ConfigError/DataError are wrapped
// into StageError carrying the stage name.
void stage_synth(const PipelineConfig& cfg, const std::filesystem::path& out);
void stage_index(const PipelineConfig& cfg, const std::filesystem::path& out);
void stage_train_gpe(const PipelineConfig& cfg, const std::filesystem::path& out);
void stage_distill(const PipelineConfig& cfg, const std::filesystem::path& out);
void stage_generate(const PipelineConfig& cfg, const std::filesystem::path& out);
MetricReport stage_eval(const PipelineConfig& cfg, const std::filesystem::path& out);

struct PipelineResult {
    MetricReport report;
    std::filesystem::path report_path;
};

/// Runs synth -> index -> train-gpe -> distill -> generate -> eval.
/// Deterministic: the same config and seed produce byte-identical artifacts.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out);

/// Ablation grid: a no-ranker cell, an NLL-only cell (configured strategy),
/// and every distillation objective crossed with every fetching strategy.
/// Each cell runs the full pipeline into out/ablate/<cell>/ and its report is
/// copied to out/ablate/report_<cell>.txt. Returns (cell name, report) pairs.
std::vector<std::pair<std::string, MetricReport>> run_ablate(const PipelineConfig& cfg,
                                                             const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// In-memory helpers (shared by the stages, the acceptance suite, and tests)
// ---------------------------------------------------------------------------

struct BenchmarkRun {
    Corpus corpus;
    std::vector<Example> train;
    std::vector<Example> eval;
    InvertedIndex index;
    ConditionalLM gpe;
};

/// Builds the benchmark in memory: dataset (synthetic or loaded), split,
/// index, trained estimator.
BenchmarkRun prepare_benchmark(const PipelineConfig& cfg);

/// Trains the ranker for the configured objective (training the encoder
/// teacher first when required).
RankerModel train_pipeline_ranker(const PipelineConfig& cfg, const BenchmarkRun& bench);

/// Mean R-precision of the final ranking over `examples`; a null model scores
/// the plain retriever order.
double mean_rprecision(const Corpus& corpus, const InvertedIndex& index,
                       const std::vector<Example>& examples, const RankerModel* model,
                       size_t retrieve_k);

/// Final ranking for one example: retrieves top-k and reranks when a model is
/// given.
CandidateList final_ranking(const Corpus& corpus, const InvertedIndex& index, const Example& ex,
                            const RankerModel* model, size_t retrieve_k);

}  // namespace genrank
