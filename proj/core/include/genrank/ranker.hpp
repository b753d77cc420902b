#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "genrank/corpus.hpp"
#include "genrank/gpe.hpp"
#include "genrank/lm.hpp"
#include "genrank/retriever.hpp"
#include "genrank/rng.hpp"

namespace genrank {

// Fixed feature order of the (query, passage) interaction features.
inline constexpr size_t kFeatureDim = 6;
enum FeatureIndex : size_t {
    kFeatUnigramOverlap = 0,  // |q ∩ p| over distinct tokens
    kFeatUnigramRatio = 1,    // |q ∩ p| / |q| (0 for an empty query)
    kFeatBigramOverlap = 2,   // shared distinct bigrams
    kFeatRetrieverScore = 3,  // softmax-normalized retriever score
    kFeatLogLength = 4,       // log(1 + passage token count)
    kFeatBias = 5,            // constant 1
};

using FeatureVector = std::array<double, kFeatureDim>;

/// Linear scorer over the interaction features; the distillation student.
struct RankerModel {
    std::array<double, kFeatureDim> weights{};
};

FeatureVector extract_features(const std::vector<std::string>& query_tokens,
                               const Passage& passage, double normalized_retriever_score);

/// Dot product with explicit dimension check (for toy-dimension callers).
double score(std::span<const double> weights, std::span<const double> features);
double score(const RankerModel& model, const FeatureVector& features);

// ---------------------------------------------------------------------------
// Losses. Each returns the loss value and its analytic gradient with respect
// to the scores; all are computed in max-subtracted stable form.
// ---------------------------------------------------------------------------

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;
};

/// loss = -log softmax(scores)[gold]; grad = softmax(scores) - onehot(gold).
LossResult nll_loss(const std::vector<double>& scores, size_t gold_index);

/// Plackett-Luce likelihood of the teacher order under the student's scores:
///   loss = -sum_k log( exp(s[o_k]) / sum_{i>=k} exp(s[o_i]) )
/// o lists candidate indices from most to least relevant.
LossResult listmle_loss(const std::vector<double>& scores, const std::vector<size_t>& teacher_order);

/// KL(target || softmax(scores)) with 0*log 0 := 0; grad = softmax(scores) - target.
LossResult kld_loss(const std::vector<double>& scores, const std::vector<double>& target);

/// Sum of nll_loss and listmle_loss (values and gradients).
LossResult combined_loss(const std::vector<double>& scores, size_t gold_index,
                         const std::vector<size_t>& teacher_order);

// ---------------------------------------------------------------------------
// Curriculum
// ---------------------------------------------------------------------------

struct CurriculumSchedule {
    size_t warmup_pool = 5;     // N0
    size_t warmup_steps = 500;  // T0
    size_t total_steps = 1000;  // T

    void validate() const;  // throws ConfigError unless 1 <= N0 and T0 < T
};

/// Sampling-space scale at step t:
///   N0                                        when t <= T0
///   N0 + floor((t-T0)/(T-T0) * (pool - N0))   when T0 < t <= T
///   pool                                      when t > T
/// A pool smaller than N0 clamps the result to the pool size (with a warning
/// on stderr). Non-decreasing in t.
size_t curriculum_scale(size_t t, const CurriculumSchedule& schedule, size_t pool_size);

enum class SamplingStrategy { Cps, Random, TopN };

/// Indices into the difficulty-sorted pool (ascending), per strategy:
///   Cps    - n distinct uniform draws from the first min(scale, pool) entries;
///            when n exceeds the scale, the whole space is taken and the rest
///            filled from the next-easiest entries in order.
///   Random - n distinct uniform draws from the whole pool.
///   TopN   - the n hardest (most query-similar) entries.
/// Throws DataError when n exceeds the pool size. The caller appends the
/// designated gold passage to the batch.
std::vector<size_t> sample_candidates(const CandidateList& sorted_pool, size_t scale, size_t n,
                                      SamplingStrategy strategy, Rng& rng);

/// One training batch: sampled negatives plus the designated gold (always
/// last, so gold_pos = passage_ids.size() - 1). Ids are distinct.
struct TrainingBatch {
    std::vector<std::string> passage_ids;
    size_t gold_pos = 0;
};

TrainingBatch assemble_batch(const CandidateList& sorted_pool,
                             std::span<const size_t> negative_indices, const std::string& gold_id);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class Objective { Nll, NllListMle, NllKld, EncoderDistill };

struct TrainOptions {
    size_t negatives_per_batch = 5;  // n
    size_t steps = 1500;
    double step_size = 0.1;
    Objective objective = Objective::NllListMle;
    SamplingStrategy strategy = SamplingStrategy::Cps;
    size_t retrieve_k = 30;
};

struct TrainResult {
    RankerModel model;
    std::vector<double> step_losses;  // one entry per step
};

/// Softmax of the answer-aware teacher's scores over the candidates; the
/// teacher sees features of (query ++ answer, passage). Pluggable wherever the
/// rectified GPE distribution is consumed.
std::vector<double> encoder_teacher_scores(const RankerModel& teacher, const std::string& query,
                                           const std::string& answer, const Corpus& corpus,
                                           std::span<const std::string> candidate_ids,
                                           std::span<const double> normalized_retriever_scores);

/// SGD distillation loop. Per step: draw an example, retrieve candidates,
/// drop golds, sort by difficulty, grow the curriculum scale, sample a batch,
/// compute the teacher signal on it, and apply one gradient step of the
/// selected objective. Deterministic given the rng seed. The EncoderDistill
/// objective requires `encoder_teacher`.
TrainResult train_ranker(const RankerModel& init, const std::vector<Example>& examples,
                         const Corpus& corpus, const InvertedIndex& index,
                         const ConditionalLM& gpe, const CurriculumSchedule& schedule,
                         const TrainOptions& options, Rng& rng,
                         const RankerModel* encoder_teacher = nullptr);

/// Trains the answer-aware encoder teacher (NLL objective over features of
/// (query ++ answer, passage)).
RankerModel train_encoder_teacher(const std::vector<Example>& examples, const Corpus& corpus,
                                  const InvertedIndex& index, const ConditionalLM& gpe,
                                  const CurriculumSchedule& schedule, const TrainOptions& options,
                                  Rng& rng);

/// Re-orders the candidates by ranker score descending, ties by ascending id.
/// Output is a permutation of the input ids; scores are the ranker's.
CandidateList rerank(const RankerModel& model, const Corpus& corpus,
                     const std::vector<std::string>& query_tokens, const CandidateList& candidates);

// Plain-text named-weight serialization; reload is bit-exact.
void save_ranker(const std::filesystem::path& path, const RankerModel& model);
RankerModel load_ranker(const std::filesystem::path& path);

}  // namespace genrank
