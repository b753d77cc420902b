#include "genrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace genrank {

FeatureVector extract_features(const std::vector<std::string>& query_tokens,
                               const Passage& passage, double normalized_retriever_score) {
    std::set<std::string> q_set(query_tokens.begin(), query_tokens.end());
    std::set<std::string> p_set(passage.tokens.begin(), passage.tokens.end());

    size_t uni = 0;
    for (const std::string& tok : q_set)
        if (p_set.count(tok)) ++uni;

    auto bigrams = [](const std::vector<std::string>& toks) {
        std::set<std::string> out;
        for (size_t i = 0; i + 1 < toks.size(); ++i) out.insert(toks[i] + '\x1f' + toks[i + 1]);
        return out;
    };
    std::set<std::string> q_bi = bigrams(query_tokens);
    std::set<std::string> p_bi = bigrams(passage.tokens);
    size_t bi = 0;
    for (const std::string& b : q_bi)
        if (p_bi.count(b)) ++bi;

    FeatureVector f{};
    f[kFeatUnigramOverlap] = static_cast<double>(uni);
    f[kFeatUnigramRatio] = q_set.empty() ? 0.0 : static_cast<double>(uni) / static_cast<double>(q_set.size());
    f[kFeatBigramOverlap] = static_cast<double>(bi);
    f[kFeatRetrieverScore] = normalized_retriever_score;
    f[kFeatLogLength] = std::log(1.0 + static_cast<double>(passage.tokens.size()));
    f[kFeatBias] = 1.0;
    return f;
}

double score(std::span<const double> weights, std::span<const double> features) {
    if (weights.size() != features.size())
        throw DataError("score: weight/feature dimension mismatch");
    double z = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
    return z;
}

double score(const RankerModel& model, const FeatureVector& features) {
    return score(std::span(model.weights), std::span(features));
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace {

std::vector<double> stable_softmax(const std::vector<double>& scores) {
    double max_s = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double denom = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - max_s);
        denom += p[i];
    }
    for (double& v : p) v /= denom;
    return p;
}

double log_sum_exp(const std::vector<double>& scores) {
    double max_s = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - max_s);
    return max_s + std::log(sum);
}

}  // namespace

LossResult nll_loss(const std::vector<double>& scores, size_t gold_index) {
    if (scores.empty()) throw DataError("nll_loss: empty scores");
    if (gold_index >= scores.size()) throw DataError("nll_loss: gold index out of range");

    LossResult out;
    out.loss = log_sum_exp(scores) - scores[gold_index];
    out.grad = stable_softmax(scores);
    out.grad[gold_index] -= 1.0;
    return out;
}

LossResult listmle_loss(const std::vector<double>& scores, const std::vector<size_t>& teacher_order) {
    const size_t n = scores.size();
    if (teacher_order.size() != n) throw DataError("listmle_loss: permutation size mismatch");
    std::vector<bool> seen(n, false);
    for (size_t idx : teacher_order) {
        if (idx >= n || seen[idx]) throw DataError("listmle_loss: invalid permutation");
        seen[idx] = true;
    }

    LossResult out;
    out.grad.assign(n, 0.0);
    if (n == 0) return out;

    // Suffix normalizers Z_k = sum_{i >= k} exp(s[o_i]) in max-subtracted form.
    double max_s = *std::max_element(scores.begin(), scores.end());
    std::vector<double> suffix(n + 1, 0.0);
    for (size_t k = n; k-- > 0;)
        suffix[k] = suffix[k + 1] + std::exp(scores[teacher_order[k]] - max_s);

    // loss = sum_k (log Z_k - s[o_k]); d loss / d s[j] = sum_{k <= pos(j)} e^{s_j}/Z_k - 1.
    for (size_t k = 0; k < n; ++k) {
        out.loss += max_s + std::log(suffix[k]) - scores[teacher_order[k]];
        for (size_t i = k; i < n; ++i)
            out.grad[teacher_order[i]] += std::exp(scores[teacher_order[i]] - max_s) / suffix[k];
    }
    for (size_t j = 0; j < n; ++j) out.grad[j] -= 1.0;
    return out;
}

LossResult kld_loss(const std::vector<double>& scores, const std::vector<double>& target) {
    if (scores.size() != target.size()) throw DataError("kld_loss: dimension mismatch");
    if (scores.empty()) throw DataError("kld_loss: empty scores");

    LossResult out;
    std::vector<double> p = stable_softmax(scores);
    double lse = log_sum_exp(scores);
    for (size_t k = 0; k < scores.size(); ++k) {
        if (target[k] > 0.0)
            out.loss += target[k] * (std::log(target[k]) - (scores[k] - lse));
    }
    out.grad.resize(scores.size());
    for (size_t k = 0; k < scores.size(); ++k) out.grad[k] = p[k] - target[k];
    return out;
}

LossResult combined_loss(const std::vector<double>& scores, size_t gold_index,
                         const std::vector<size_t>& teacher_order) {
    LossResult nll = nll_loss(scores, gold_index);
    LossResult lml = listmle_loss(scores, teacher_order);
    LossResult out;
    out.loss = nll.loss + lml.loss;
    out.grad.resize(scores.size());
    for (size_t k = 0; k < scores.size(); ++k) out.grad[k] = nll.grad[k] + lml.grad[k];
    return out;
}

// ---------------------------------------------------------------------------
// Curriculum
// ---------------------------------------------------------------------------

void CurriculumSchedule::validate() const {
    if (warmup_pool < 1) throw ConfigError("schedule: N0 must be >= 1");
    if (warmup_steps >= total_steps) throw ConfigError("schedule: T0 must be < T");
}

size_t curriculum_scale(size_t t, const CurriculumSchedule& schedule, size_t pool_size) {
    schedule.validate();
    const size_t n0 = schedule.warmup_pool;
    const size_t t0 = schedule.warmup_steps;
    const size_t total = schedule.total_steps;

    if (pool_size < n0) {
        std::cerr << "warning: candidate pool (" << pool_size << ") smaller than warm-up scale N0 ("
                  << n0 << "); clamping\n";
        return pool_size;
    }
    if (t <= t0) return n0;
    if (t <= total) return n0 + (t - t0) * (pool_size - n0) / (total - t0);
    return pool_size;
}

std::vector<size_t> sample_candidates(const CandidateList& sorted_pool, size_t scale, size_t n,
                                      SamplingStrategy strategy, Rng& rng) {
    const size_t pool = sorted_pool.size();
    if (n > pool) throw DataError("sample_candidates: n exceeds pool size");

    std::vector<size_t> picked;
    switch (strategy) {
        case SamplingStrategy::Cps: {
            size_t space = std::min(scale, pool);
            if (n <= space) {
                picked = rng.sample_indices(space, n);
            } else {
                // Warm-up pool smaller than the batch: take the whole space and
                // fill with the next-easiest candidates in order.
                for (size_t i = 0; i < space; ++i) picked.push_back(i);
                for (size_t i = space; picked.size() < n; ++i) picked.push_back(i);
            }
            break;
        }
        case SamplingStrategy::Random:
            picked = rng.sample_indices(pool, n);
            break;
        case SamplingStrategy::TopN:
            for (size_t i = pool - n; i < pool; ++i) picked.push_back(i);
            break;
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

TrainingBatch assemble_batch(const CandidateList& sorted_pool,
                             std::span<const size_t> negative_indices, const std::string& gold_id) {
    TrainingBatch batch;
    batch.passage_ids.reserve(negative_indices.size() + 1);
    for (size_t idx : negative_indices) {
        if (idx >= sorted_pool.size()) throw DataError("assemble_batch: index out of range");
        batch.passage_ids.push_back(sorted_pool.entries[idx].id);
    }
    batch.passage_ids.push_back(gold_id);
    batch.gold_pos = batch.passage_ids.size() - 1;
    return batch;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

std::vector<double> encoder_teacher_scores(const RankerModel& teacher, const std::string& query,
                                           const std::string& answer, const Corpus& corpus,
                                           std::span<const std::string> candidate_ids,
                                           std::span<const double> normalized_retriever_scores) {
    if (candidate_ids.size() != normalized_retriever_scores.size())
        throw DataError("encoder_teacher_scores: score/candidate size mismatch");
    std::vector<std::string> aug_tokens = tokenize(query);
    std::vector<std::string> ans_tokens = tokenize(answer);
    aug_tokens.insert(aug_tokens.end(), ans_tokens.begin(), ans_tokens.end());

    std::vector<double> scores;
    scores.reserve(candidate_ids.size());
    for (size_t i = 0; i < candidate_ids.size(); ++i) {
        FeatureVector f =
            extract_features(aug_tokens, corpus.at(candidate_ids[i]), normalized_retriever_scores[i]);
        scores.push_back(score(teacher, f));
    }
    return softmax_scores(scores);
}

namespace {

// Everything train_ranker needs per example, built once and reused across steps.
struct ExampleState {
    std::vector<std::string> query_tokens;
    std::string gold_id;
    CandidateList pool_sorted;  // golds removed, ascending difficulty
    std::unordered_map<std::string, double> norm_score;   // over the full retrieved list
    std::unordered_map<std::string, double> gpe_logprob;  // answer log-likelihood per candidate
};

ExampleState build_example_state(const Example& ex, const Corpus& corpus,
                                 const InvertedIndex& index, const ConditionalLM& gpe,
                                 size_t retrieve_k) {
    ExampleState state;
    state.query_tokens = tokenize(ex.query);
    state.gold_id = designated_gold(ex, index);

    CandidateList retrieved = index.retrieve(state.query_tokens, retrieve_k, ex.id);
    bool gold_present = false;
    for (const ScoredId& e : retrieved.entries) gold_present |= (e.id == state.gold_id);
    if (!gold_present)
        retrieved.entries.push_back(
            {state.gold_id, index.score_passage(state.query_tokens, state.gold_id)});

    std::vector<double> norm = normalize_scores(retrieved);
    for (size_t i = 0; i < retrieved.size(); ++i)
        state.norm_score[retrieved.entries[i].id] = norm[i];

    std::unordered_set<std::string> golds(ex.gold_provenance.begin(), ex.gold_provenance.end());
    CandidateList pool;
    pool.query_id = ex.id;
    for (const ScoredId& e : retrieved.entries)
        if (!golds.count(e.id)) pool.entries.push_back(e);
    state.pool_sorted = sort_by_difficulty(pool);

    for (const ScoredId& e : retrieved.entries)
        state.gpe_logprob[e.id] = answer_logprob(gpe, ex.query, corpus.at(e.id), ex.answers.front());
    return state;
}

TeacherSignal signal_from_cached(const ExampleState& state, const TrainingBatch& batch) {
    TeacherSignal signal;
    signal.gold_index = batch.gold_pos;
    std::vector<double> logprobs;
    logprobs.reserve(batch.passage_ids.size());
    for (const std::string& pid : batch.passage_ids) logprobs.push_back(state.gpe_logprob.at(pid));
    signal.z = ratio_scores(logprobs);
    signal.r = softmax_scores(signal.z);
    Rectified rect = rectify(signal.r, signal.gold_index);
    signal.r_rect = std::move(rect.r_rect);
    signal.epsilon = rect.epsilon;
    signal.order = teacher_permutation(signal.r_rect, signal.gold_index);
    return signal;
}

TrainResult train_linear(const RankerModel& init, const std::vector<Example>& examples,
                         const Corpus& corpus, const InvertedIndex& index,
                         const ConditionalLM& gpe, const CurriculumSchedule& schedule,
                         const TrainOptions& options, Rng& rng,
                         const RankerModel* encoder_teacher, bool answer_aware_features) {
    if (examples.empty()) throw DataError("train_ranker: no training examples");
    if (options.objective == Objective::EncoderDistill && encoder_teacher == nullptr)
        throw ConfigError("train_ranker: encoder objective requires a trained encoder teacher");
    schedule.validate();

    TrainResult result;
    result.model = init;
    result.step_losses.reserve(options.steps);

    std::vector<ExampleState> cache(examples.size());
    std::vector<bool> cached(examples.size(), false);

    for (size_t t = 0; t < options.steps; ++t) {
        size_t ex_idx = static_cast<size_t>(rng.below(examples.size()));
        const Example& ex = examples[ex_idx];
        if (!cached[ex_idx]) {
            cache[ex_idx] = build_example_state(ex, corpus, index, gpe, options.retrieve_k);
            cached[ex_idx] = true;
        }
        const ExampleState& state = cache[ex_idx];

        size_t pool = state.pool_sorted.size();
        size_t n = std::min(options.negatives_per_batch, pool);
        size_t scale = curriculum_scale(t, schedule, pool);
        std::vector<size_t> negatives =
            sample_candidates(state.pool_sorted, scale, n, options.strategy, rng);
        TrainingBatch batch = assemble_batch(state.pool_sorted, negatives, state.gold_id);
        TeacherSignal signal = signal_from_cached(state, batch);

        std::vector<std::string> feature_query = state.query_tokens;
        if (answer_aware_features) {
            std::vector<std::string> ans = tokenize(ex.answers.front());
            feature_query.insert(feature_query.end(), ans.begin(), ans.end());
        }

        std::vector<FeatureVector> feats;
        std::vector<double> scores;
        feats.reserve(batch.passage_ids.size());
        scores.reserve(batch.passage_ids.size());
        for (const std::string& pid : batch.passage_ids) {
            feats.push_back(
                extract_features(feature_query, corpus.at(pid), state.norm_score.at(pid)));
            scores.push_back(score(result.model, feats.back()));
        }

        LossResult step_loss;
        switch (options.objective) {
            case Objective::Nll:
                step_loss = nll_loss(scores, batch.gold_pos);
                break;
            case Objective::NllListMle:
                step_loss = combined_loss(scores, batch.gold_pos, signal.order);
                break;
            case Objective::NllKld: {
                LossResult nll = nll_loss(scores, batch.gold_pos);
                LossResult kld = kld_loss(scores, signal.r_rect);
                step_loss.loss = nll.loss + kld.loss;
                step_loss.grad.resize(scores.size());
                for (size_t k = 0; k < scores.size(); ++k)
                    step_loss.grad[k] = nll.grad[k] + kld.grad[k];
                break;
            }
            case Objective::EncoderDistill: {
                std::vector<double> norm;
                norm.reserve(batch.passage_ids.size());
                for (const std::string& pid : batch.passage_ids)
                    norm.push_back(state.norm_score.at(pid));
                std::vector<double> teacher_dist = encoder_teacher_scores(
                    *encoder_teacher, ex.query, ex.answers.front(), corpus, batch.passage_ids, norm);
                Rectified rect = rectify(teacher_dist, batch.gold_pos);
                std::vector<size_t> order = teacher_permutation(rect.r_rect, batch.gold_pos);
                step_loss = combined_loss(scores, batch.gold_pos, order);
                break;
            }
        }

        for (size_t k = 0; k < scores.size(); ++k)
            for (size_t j = 0; j < kFeatureDim; ++j)
                result.model.weights[j] -= options.step_size * step_loss.grad[k] * feats[k][j];
        result.step_losses.push_back(step_loss.loss);
    }
    return result;
}

}  // namespace

TrainResult train_ranker(const RankerModel& init, const std::vector<Example>& examples,
                         const Corpus& corpus, const InvertedIndex& index,
                         const ConditionalLM& gpe, const CurriculumSchedule& schedule,
                         const TrainOptions& options, Rng& rng,
                         const RankerModel* encoder_teacher) {
    return train_linear(init, examples, corpus, index, gpe, schedule, options, rng, encoder_teacher,
                        /*answer_aware_features=*/false);
}

RankerModel train_encoder_teacher(const std::vector<Example>& examples, const Corpus& corpus,
                                  const InvertedIndex& index, const ConditionalLM& gpe,
                                  const CurriculumSchedule& schedule, const TrainOptions& options,
                                  Rng& rng) {
    TrainOptions teacher_options = options;
    teacher_options.objective = Objective::Nll;
    return train_linear(RankerModel{}, examples, corpus, index, gpe, schedule, teacher_options, rng,
                        nullptr, /*answer_aware_features=*/true)
        .model;
}

CandidateList rerank(const RankerModel& model, const Corpus& corpus,
                     const std::vector<std::string>& query_tokens,
                     const CandidateList& candidates) {
    CandidateList out;
    out.query_id = candidates.query_id;
    if (candidates.empty()) return out;

    std::vector<double> norm = normalize_scores(candidates);
    out.entries.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        FeatureVector f = extract_features(query_tokens, corpus.at(candidates.entries[i].id), norm[i]);
        out.entries.push_back({candidates.entries[i].id, score(model, f)});
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, kFeatureDim> kWeightNames = {
    "unigram_overlap", "unigram_ratio", "bigram_overlap", "retriever_score", "log_length", "bias"};

}  // namespace

void save_ranker(const std::filesystem::path& path, const RankerModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ranker model: " + path.string());
    out << "genrank-ranker 1\n";
    char buf[64];
    for (size_t i = 0; i < kFeatureDim; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", model.weights[i]);
        out << kWeightNames[i] << " = " << buf << '\n';
    }
}

RankerModel load_ranker(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ranker model: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "genrank-ranker 1")
        throw DataError("not a genrank-ranker model file: " + path.string());

    RankerModel model;
    std::array<bool, kFeatureDim> seen{};
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t eq = line.find(" = ");
        if (eq == std::string::npos) throw DataError("malformed ranker model row: " + line);
        std::string name = line.substr(0, eq);
        double value = std::stod(line.substr(eq + 3));
        bool known = false;
        for (size_t i = 0; i < kFeatureDim; ++i) {
            if (name == kWeightNames[i]) {
                model.weights[i] = value;
                seen[i] = true;
                known = true;
                break;
            }
        }
        if (!known) throw DataError("unknown ranker weight: " + name);
    }
    for (size_t i = 0; i < kFeatureDim; ++i)
        if (!seen[i]) throw DataError(std::string("ranker model missing weight: ") + kWeightNames[i]);
    return model;
}

}  // namespace genrank
