#pragma once

#include <span>
#include <string>
#include <vector>

#include "genrank/corpus.hpp"
#include "genrank/lm.hpp"
#include "genrank/retriever.hpp"

namespace genrank {

/// Teacher signal for one candidate set: raw answer-likelihood ratios z, their
/// softmax r, the rectified distribution r_rect with its mixing term epsilon,
/// the designated-gold index, and the teacher order (indices into the
/// candidate set, most relevant first).
struct TeacherSignal {
    std::vector<double> z;
    std::vector<double> r;
    std::vector<double> r_rect;
    double epsilon = 0.0;
    size_t gold_index = 0;
    std::vector<size_t> order;
};

/// The gold passage used for one-hot supervision when an example annotates
/// several: the one the retriever scores highest, ties broken by ascending id.
/// Throws DataError when a gold id is missing from the index.
std::string designated_gold(const Example& example, const InvertedIndex& index);

/// Trains the estimator on (query ++ gold passage ++ first answer) token
/// sequences. The designated gold is used when an example has several
/// provenances (first listed id when no index is supplied). The returned model
/// is frozen: scoring never mutates it.
ConditionalLM train_gpe(const std::vector<Example>& examples, const Corpus& corpus,
                        const LmConfig& cfg, const InvertedIndex* index = nullptr);

/// Mixture log-likelihood of the answer given (query ++ passage). Always
/// finite, strictly negative for a non-empty answer, 0 for an empty one.
double answer_logprob(const ConditionalLM& lm, const std::string& query, const Passage& passage,
                      const std::string& answer);

/// z_k = (sum_j L_j) / L_k over answer log-likelihoods. The numerator is
/// shared across the whole candidate set, so z depends on the set's
/// composition. Throws DataError when any L_k is 0 (empty answer), where the
/// ratio is undefined.
std::vector<double> ratio_scores(const std::vector<double>& answer_logprobs);

/// Answer-likelihood ratio per candidate: ratio_scores applied to
/// answer_logprob of each candidate.
std::vector<double> estimate_scores(const ConditionalLM& lm, const std::string& query,
                                    const Corpus& corpus,
                                    std::span<const std::string> candidate_ids,
                                    const std::string& answer);
std::vector<double> estimate_scores(const ConditionalLM& lm, const std::string& query,
                                    const Corpus& corpus, const CandidateList& candidates,
                                    const std::string& answer);

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax_scores(const std::vector<double>& z);

/// Label rectification: with m the largest non-gold probability,
///   epsilon = m / (1 + m),   r_rect = epsilon * onehot(gold) + (1 - epsilon) * r,
/// which makes the gold entry weakly maximal (epsilon = (1-epsilon) * m).
/// A single-candidate distribution is returned unchanged with epsilon = 0.
struct Rectified {
    std::vector<double> r_rect;
    double epsilon = 0.0;
};
Rectified rectify(const std::vector<double>& r, size_t gold_index);

/// Candidate indices sorted by r_rect descending; ties broken gold-first, then
/// by ascending index, so rectification's weak maximum never demotes the gold.
std::vector<size_t> teacher_permutation(const std::vector<double>& r_rect, size_t gold_index);

/// Runs the full chain estimate_scores -> softmax -> rectify -> permutation.
TeacherSignal compute_teacher_signal(const ConditionalLM& lm, const std::string& query,
                                     const Corpus& corpus,
                                     std::span<const std::string> candidate_ids,
                                     const std::string& answer, size_t gold_index);

}  // namespace genrank
