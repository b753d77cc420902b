#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "genrank/errors.hpp"

namespace genrank {

/// Reserved end-of-sequence token. Appended after tokenization, so it can
/// never collide with a corpus token ('<' never survives tokenize()).
inline constexpr const char* kEndToken = "<eos>";

/// Reserved begin-of-sequence sentinel. Training prepends order-1 of these to
/// every sequence and scoring pads short prefixes with them, so the
/// first-token distribution reflects sequence starts. Appears only inside
/// context keys, never as a predicted token.
inline constexpr const char* kBeginToken = "<s>";

struct LmConfig {
    int order = 2;             // n-gram order
    double add_k = 1.0;        // additive smoothing constant
    double copy_weight = 0.5;  // mixture weight of the copy term, in [0, 1]

    void validate() const;  // throws ConfigError
};

/// Smoothed bag-of-tokens distribution over the tokens of a (query, passage)
/// concatenation. prob() is add-k smoothed over an explicit support size so
/// the distribution sums to exactly 1 over that support.
struct CopyBag {
    std::map<std::string, uint64_t> counts;
    uint64_t total = 0;

    static CopyBag from_tokens(std::span<const std::string> tokens);

    double prob(const std::string& token, double add_k, size_t support) const;
};

/// Count-based conditional language model with additive smoothing and a copy
/// mixture. Trained once from token sequences; every scoring member is const,
/// so a trained model is immutable and safe to share across threads.
///
/// Probabilities are taken over an explicit support: the model vocabulary by
/// default, optionally extended with the tokens of the scoring call's context
/// (query and passage), so copy and n-gram terms always normalize over the
/// same set. Tokens outside the support receive the zero-count smoothing
/// floor rather than probability zero.
class ConditionalLM {
public:
    ConditionalLM() = default;
    explicit ConditionalLM(LmConfig cfg);

    /// Accumulates n-gram counts over each sequence (left-padded with begin
    /// sentinels): every position feeds the context tables of all lengths
    /// 0..order-1.
    static ConditionalLM train(LmConfig cfg,
                               const std::vector<std::vector<std::string>>& sequences);

    const LmConfig& config() const { return cfg_; }
    size_t vocab_size() const { return vocab_.size(); }
    bool in_vocab(const std::string& token) const { return vocab_.count(token) != 0; }
    const std::set<std::string>& vocab() const { return vocab_; }

    /// p(token | context), conditioned on the last order-1 context tokens
    /// (begin-padded when fewer are available), add-k smoothed over `support`
    /// (0 means the model vocabulary size).
    double cond_prob(const std::string& token, std::span<const std::string> context,
                     size_t support = 0) const;

    /// |vocab ∪ extra| for one or more extra token sets.
    size_t support_with(std::span<const std::string> extra) const;
    size_t support_with(const CopyBag& bag) const;

    /// Sum over answer tokens of
    ///   log( copy_weight * p_copy(y_t | bag) + (1-copy_weight) * p_ngram(y_t | y_<t) )
    /// where bag holds the tokens of (query ++ passage) and p_ngram conditions
    /// only on the previous answer tokens. Empty answer yields 0 (empty
    /// product); smoothing keeps every term finite and strictly negative.
    double mixture_answer_logprob(const CopyBag& context_bag,
                                  std::span<const std::string> answer_tokens) const;

    // Count-table serialization. Reload reproduces bit-identical scores.
    void save(const std::filesystem::path& path) const;
    static ConditionalLM load(const std::filesystem::path& path);

private:
    using Row = std::map<std::string, uint64_t>;

    struct ContextTable {
        std::map<std::string, Row> rows;          // context key -> token counts
        std::map<std::string, uint64_t> totals;   // context key -> row total
    };

    static std::string context_key(std::span<const std::string> context, size_t len);

    LmConfig cfg_;
    std::set<std::string> vocab_;
    std::vector<ContextTable> tables_;  // index = context length, 0..order-1
};

}  // namespace genrank
