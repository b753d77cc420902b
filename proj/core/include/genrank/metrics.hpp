#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "genrank/corpus.hpp"

namespace genrank {

/// Open-QA answer normalization: lowercase, strip punctuation, drop the
/// articles "a"/"an"/"the", collapse whitespace.
std::string normalize_answer(std::string_view s);

/// 1 iff the normalized prediction equals any normalized gold alias.
double exact_match(const std::string& pred, const std::vector<std::string>& golds);

/// Max over gold aliases of the unigram-multiset F1 between normalized
/// prediction and gold. Both sides empty -> 1; exactly one empty -> 0.
double unigram_f1(const std::string& pred, const std::vector<std::string>& golds);

/// LCS-based F-measure (beta = 1) over lightly normalized tokens (lowercase,
/// punctuation stripped; articles are kept). 0 when the LCS is empty.
double rouge_l(const std::string& pred, const std::string& gold);

/// 1 iff any gold id is ranked first.
double r_precision(const std::vector<std::string>& ranked_ids,
                   const std::vector<std::string>& gold_ids);

/// 1 iff any gold id appears in the top 5.
double recall_at_5(const std::vector<std::string>& ranked_ids,
                   const std::vector<std::string>& gold_ids);

/// KILT-conditioned metric: the base value counted only when the top-ranked
/// passage is a gold provenance. base_value must lie in [0, 1].
double kilt_variant(double base_value, double rprec_hit);

/// One decoded answer with its final passage ranking.
struct PredictionRecord {
    std::string example_id;
    std::string answer;
    std::vector<std::string> ranked_ids;
};

struct ExampleMetrics {
    std::string id;
    double r_precision = 0.0;
    double recall_at_5 = 0.0;
    double em = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    double rouge_l = 0.0;
    double kilt_em = 0.0;
    double kilt_f1 = 0.0;
    double kilt_accuracy = 0.0;
    double kilt_rouge_l = 0.0;
};

/// Per-example values plus their unweighted corpus means.
struct MetricReport {
    std::vector<ExampleMetrics> per_example;
    ExampleMetrics mean;
};

/// Scores every example against its prediction (matched by id; every example
/// must have one). Accuracy is exact match over the normalized answer string;
/// Rouge-L is computed against the first gold alias.
MetricReport evaluate_predictions(const std::vector<Example>& examples,
                                  const std::vector<PredictionRecord>& predictions);

/// Deterministic plain-text rendering (fixed precision, fixed field order), so
/// identical runs produce byte-identical report files.
std::string format_report(const MetricReport& report);
void write_report(const std::filesystem::path& path, const MetricReport& report);

// Predictions file: one record per line, `id<TAB>answer<TAB>pid1 pid2 ...`.
void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& predictions);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

}  // namespace genrank
