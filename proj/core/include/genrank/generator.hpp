#pragma once

#include <string>
#include <vector>

#include "genrank/corpus.hpp"
#include "genrank/lm.hpp"
#include "genrank/retriever.hpp"

namespace genrank {

/// Evidence representation for one selected passage: the copy bag over the
/// tokens of (query ++ passage).
struct FusionContext {
    CopyBag bag;
};

struct DecodeConfig {
    size_t top_k_passages = 15;
    size_t beam_size = 3;
    size_t max_len = 32;

    void validate() const;  // throws ConfigError unless all >= 1
};

/// Bag-of-tokens evidence encoding; insensitive to token order by construction.
FusionContext encode_pair(const std::vector<std::string>& query_tokens, const Passage& passage);

/// The fused next-token distribution at one decode step, over the union of the
/// model vocabulary and every context's tokens (sorted):
///   p(y | prefix) = mean_m [ w * copy_m(y) + (1-w) * p_ngram(y | prefix) ]
/// with w the model's copy weight. Sums to 1 over the returned support.
std::vector<std::pair<std::string, double>> fusion_step_distribution(
    const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
    const std::vector<std::string>& prefix);

/// Beam search over the fused distribution, terminated by the end token or
/// max_len. Hypotheses are compared by total log-probability, ties broken by
/// lexicographically smaller token sequence; the greedy rollout is always kept
/// as a completion candidate, so the result never scores below greedy. The end
/// token is inadmissible as the first token (answers are non-empty), otherwise
/// the empty hypothesis would dominate every comparison by total probability.
/// Deterministic. Throws DataError on an empty context list.
std::string fuse_and_decode(const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
                            const DecodeConfig& cfg);

/// Log-likelihood of an answer under the fused distribution (used to measure
/// generator fit; conditions only on the given contexts and the answer prefix).
double fused_answer_logprob(const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
                            const std::vector<std::string>& answer_tokens);

/// Maximum-likelihood counting of answer sequences, each terminated by the
/// reserved end token. The ranked lists name the evidence paired with each
/// example; with this count-based model the evidence conditions generation
/// through the copy mixture at decode time, so only the answer transitions are
/// counted. Answers are the examples' first aliases.
ConditionalLM train_generator(const std::vector<Example>& examples, const Corpus& corpus,
                              const std::vector<CandidateList>& ranked_lists, const LmConfig& cfg);

}  // namespace genrank
