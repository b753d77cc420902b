#include "genrank/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace genrank {

void DecodeConfig::validate() const {
    if (top_k_passages < 1 || beam_size < 1 || max_len < 1)
        throw ConfigError("decode: top_k_passages, beam_size and max_len must be >= 1");
}

FusionContext encode_pair(const std::vector<std::string>& query_tokens, const Passage& passage) {
    std::vector<std::string> all = query_tokens;
    all.insert(all.end(), passage.tokens.begin(), passage.tokens.end());
    return FusionContext{CopyBag::from_tokens(all)};
}

namespace {

// Decode support: model vocabulary plus every context token, sorted so
// iteration order (and therefore lexicographic tie-breaking) is deterministic.
std::vector<std::string> decode_support(const std::vector<FusionContext>& contexts,
                                        const ConditionalLM& lm) {
    std::set<std::string> support(lm.vocab().begin(), lm.vocab().end());
    for (const FusionContext& ctx : contexts)
        for (const auto& [tok, _] : ctx.bag.counts) support.insert(tok);
    return {support.begin(), support.end()};
}

std::vector<double> mean_copy_probs(const std::vector<FusionContext>& contexts,
                                    const std::vector<std::string>& support, double add_k) {
    std::vector<double> mean(support.size(), 0.0);
    for (const FusionContext& ctx : contexts)
        for (size_t i = 0; i < support.size(); ++i)
            mean[i] += ctx.bag.prob(support[i], add_k, support.size());
    for (double& v : mean) v /= static_cast<double>(contexts.size());
    return mean;
}

struct Hypothesis {
    std::vector<std::string> tokens;  // end token excluded
    double logprob = 0.0;
};

// Higher logprob wins; exact ties prefer the lexicographically smaller sequence.
bool better_than(const Hypothesis& a, const Hypothesis& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.tokens < b.tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> fusion_step_distribution(
    const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
    const std::vector<std::string>& prefix) {
    if (contexts.empty()) throw DataError("fusion: empty context list");
    std::vector<std::string> support = decode_support(contexts, lm);
    std::vector<double> mean_copy = mean_copy_probs(contexts, support, lm.config().add_k);

    const double w = lm.config().copy_weight;
    std::vector<std::pair<std::string, double>> dist;
    dist.reserve(support.size());
    for (size_t i = 0; i < support.size(); ++i) {
        double ngram = lm.cond_prob(support[i], std::span(prefix.data(), prefix.size()),
                                    support.size());
        dist.emplace_back(support[i], w * mean_copy[i] + (1.0 - w) * ngram);
    }
    return dist;
}

std::string fuse_and_decode(const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
                            const DecodeConfig& cfg) {
    cfg.validate();
    if (contexts.empty()) throw DataError("fuse_and_decode: empty context list");

    const std::vector<std::string> support = decode_support(contexts, lm);
    if (support.empty() || (support.size() == 1 && support[0] == kEndToken))
        return "";  // nothing decodable: untrained model over empty evidence
    const std::vector<double> mean_copy = mean_copy_probs(contexts, support, lm.config().add_k);
    const double w = lm.config().copy_weight;

    auto step_logprob = [&](const std::vector<std::string>& prefix, size_t support_idx) {
        double ngram = lm.cond_prob(support[support_idx], std::span(prefix.data(), prefix.size()),
                                    support.size());
        return std::log(w * mean_copy[support_idx] + (1.0 - w) * ngram);
    };

    auto eos_admissible = [&](const std::vector<std::string>& prefix) { return !prefix.empty(); };

    // Greedy rollout, kept as a guaranteed completion candidate.
    Hypothesis greedy;
    for (size_t t = 0; t < cfg.max_len; ++t) {
        bool have_best = false;
        size_t best_idx = 0;
        double best_lp = 0.0;
        for (size_t i = 0; i < support.size(); ++i) {
            if (support[i] == kEndToken && !eos_admissible(greedy.tokens)) continue;
            double lp = step_logprob(greedy.tokens, i);
            if (!have_best || lp > best_lp) {  // support is sorted, so ties keep the smaller token
                have_best = true;
                best_lp = lp;
                best_idx = i;
            }
        }
        greedy.logprob += best_lp;
        if (support[best_idx] == kEndToken) break;
        greedy.tokens.push_back(support[best_idx]);
    }

    if (cfg.beam_size == 1) return join_tokens(greedy.tokens);

    Hypothesis best_finished = greedy;
    std::vector<Hypothesis> live = {Hypothesis{}};
    for (size_t t = 0; t < cfg.max_len && !live.empty(); ++t) {
        std::vector<Hypothesis> expansions;
        expansions.reserve(live.size() * support.size());
        for (const Hypothesis& hyp : live) {
            for (size_t i = 0; i < support.size(); ++i) {
                if (support[i] == kEndToken && !eos_admissible(hyp.tokens)) continue;
                double lp = hyp.logprob + step_logprob(hyp.tokens, i);
                if (support[i] == kEndToken) {
                    Hypothesis done{hyp.tokens, lp};
                    if (better_than(done, best_finished)) best_finished = std::move(done);
                } else {
                    Hypothesis next{hyp.tokens, lp};
                    next.tokens.push_back(support[i]);
                    expansions.push_back(std::move(next));
                }
            }
        }
        std::sort(expansions.begin(), expansions.end(), better_than);
        if (expansions.size() > cfg.beam_size) expansions.resize(cfg.beam_size);
        live = std::move(expansions);
    }
    for (const Hypothesis& hyp : live)
        if (better_than(hyp, best_finished)) best_finished = hyp;

    return join_tokens(best_finished.tokens);
}

double fused_answer_logprob(const std::vector<FusionContext>& contexts, const ConditionalLM& lm,
                            const std::vector<std::string>& answer_tokens) {
    if (contexts.empty()) throw DataError("fusion: empty context list");
    const std::vector<std::string> support = decode_support(contexts, lm);
    const std::vector<double> mean_copy = mean_copy_probs(contexts, support, lm.config().add_k);
    const double w = lm.config().copy_weight;

    double total = 0.0;
    for (size_t t = 0; t < answer_tokens.size(); ++t) {
        double copy = 0.0;
        auto it = std::lower_bound(support.begin(), support.end(), answer_tokens[t]);
        if (it != support.end() && *it == answer_tokens[t]) {
            copy = mean_copy[static_cast<size_t>(it - support.begin())];
        } else {
            for (const FusionContext& ctx : contexts)
                copy += ctx.bag.prob(answer_tokens[t], lm.config().add_k, support.size());
            copy /= static_cast<double>(contexts.size());
        }
        double ngram = lm.cond_prob(answer_tokens[t], std::span(answer_tokens.data(), t),
                                    support.size());
        total += std::log(w * copy + (1.0 - w) * ngram);
    }
    return total;
}

ConditionalLM train_generator(const std::vector<Example>& examples, const Corpus& corpus,
                              const std::vector<CandidateList>& ranked_lists, const LmConfig& cfg) {
    (void)corpus;
    (void)ranked_lists;  // evidence conditions decoding through the copy mixture
    std::vector<std::vector<std::string>> sequences;
    sequences.reserve(examples.size());
    for (const Example& ex : examples) {
        std::vector<std::string> seq = tokenize(ex.answers.front());
        seq.push_back(kEndToken);
        sequences.push_back(std::move(seq));
    }
    return ConditionalLM::train(cfg, sequences);
}

}  // namespace genrank
