#include "genrank/gpe.hpp"

#include <algorithm>
#include <cmath>

namespace genrank {

std::string designated_gold(const Example& example, const InvertedIndex& index) {
    if (example.gold_provenance.empty()) throw DataError("example " + example.id + " has no provenance");
    std::vector<std::string> query_tokens = tokenize(example.query);
    std::string best;
    double best_score = 0.0;
    for (const std::string& pid : example.gold_provenance) {
        double s = index.score_passage(query_tokens, pid);
        if (best.empty() || s > best_score || (s == best_score && pid < best)) {
            best = pid;
            best_score = s;
        }
    }
    return best;
}

ConditionalLM train_gpe(const std::vector<Example>& examples, const Corpus& corpus,
                        const LmConfig& cfg, const InvertedIndex* index) {
    std::vector<std::vector<std::string>> sequences;
    sequences.reserve(examples.size());
    for (const Example& ex : examples) {
        std::string gold_id;
        if (index) {
            gold_id = designated_gold(ex, *index);
        } else {
            gold_id = *std::min_element(ex.gold_provenance.begin(), ex.gold_provenance.end());
        }
        const Passage* gold = corpus.find(gold_id);
        if (!gold)
            throw DataError("example " + ex.id + ": gold passage '" + gold_id + "' not in corpus");

        std::vector<std::string> seq = tokenize(ex.query);
        seq.insert(seq.end(), gold->tokens.begin(), gold->tokens.end());
        std::vector<std::string> answer = tokenize(ex.answers.front());
        seq.insert(seq.end(), answer.begin(), answer.end());
        sequences.push_back(std::move(seq));
    }
    return ConditionalLM::train(cfg, sequences);
}

double answer_logprob(const ConditionalLM& lm, const std::string& query, const Passage& passage,
                      const std::string& answer) {
    std::vector<std::string> context = tokenize(query);
    context.insert(context.end(), passage.tokens.begin(), passage.tokens.end());
    CopyBag bag = CopyBag::from_tokens(context);
    std::vector<std::string> answer_tokens = tokenize(answer);
    return lm.mixture_answer_logprob(bag, answer_tokens);
}

std::vector<double> ratio_scores(const std::vector<double>& answer_logprobs) {
    if (answer_logprobs.empty()) throw DataError("ratio_scores: no candidates");
    double total = 0.0;
    for (double lp : answer_logprobs) {
        if (lp == 0.0)
            throw DataError("ratio_scores: zero answer log-likelihood (empty answer?), ratio undefined");
        total += lp;
    }
    std::vector<double> z(answer_logprobs.size());
    for (size_t k = 0; k < z.size(); ++k) z[k] = total / answer_logprobs[k];
    return z;
}

std::vector<double> estimate_scores(const ConditionalLM& lm, const std::string& query,
                                    const Corpus& corpus,
                                    std::span<const std::string> candidate_ids,
                                    const std::string& answer) {
    if (candidate_ids.empty()) throw DataError("estimate_scores: no candidates");
    std::vector<double> logprobs;
    logprobs.reserve(candidate_ids.size());
    for (const std::string& pid : candidate_ids)
        logprobs.push_back(answer_logprob(lm, query, corpus.at(pid), answer));
    return ratio_scores(logprobs);
}

std::vector<double> estimate_scores(const ConditionalLM& lm, const std::string& query,
                                    const Corpus& corpus, const CandidateList& candidates,
                                    const std::string& answer) {
    std::vector<std::string> ids;
    ids.reserve(candidates.size());
    for (const ScoredId& e : candidates.entries) ids.push_back(e.id);
    return estimate_scores(lm, query, corpus, ids, answer);
}

std::vector<double> softmax_scores(const std::vector<double>& z) {
    if (z.empty()) throw DataError("softmax_scores: empty input");
    double max_z = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double denom = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - max_z);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

Rectified rectify(const std::vector<double>& r, size_t gold_index) {
    if (gold_index >= r.size()) throw DataError("rectify: gold index out of range");
    double sum = 0.0;
    for (double v : r) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("rectify: input is not a distribution");

    double m = 0.0;  // largest non-gold probability; 0 when there is none
    for (size_t i = 0; i < r.size(); ++i)
        if (i != gold_index) m = std::max(m, r[i]);

    Rectified out;
    out.epsilon = m / (1.0 + m);
    out.r_rect.resize(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
        out.r_rect[i] = (1.0 - out.epsilon) * r[i];
        if (i == gold_index) out.r_rect[i] += out.epsilon;
    }
    return out;
}

std::vector<size_t> teacher_permutation(const std::vector<double>& r_rect, size_t gold_index) {
    std::vector<size_t> order(r_rect.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (r_rect[a] != r_rect[b]) return r_rect[a] > r_rect[b];
        if ((a == gold_index) != (b == gold_index)) return a == gold_index;
        return a < b;
    });
    return order;
}

TeacherSignal compute_teacher_signal(const ConditionalLM& lm, const std::string& query,
                                     const Corpus& corpus,
                                     std::span<const std::string> candidate_ids,
                                     const std::string& answer, size_t gold_index) {
    TeacherSignal signal;
    signal.gold_index = gold_index;
    signal.z = estimate_scores(lm, query, corpus, candidate_ids, answer);
    signal.r = softmax_scores(signal.z);
    Rectified rect = rectify(signal.r, gold_index);
    signal.r_rect = std::move(rect.r_rect);
    signal.epsilon = rect.epsilon;
    signal.order = teacher_permutation(signal.r_rect, gold_index);
    return signal;
}

}  // namespace genrank
