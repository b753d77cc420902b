#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "genrank/corpus.hpp"

namespace genrank {

// BM25 parameters. idf is clamped at 0 so scores stay non-negative.
inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

struct ScoredId {
    std::string id;
    double score = 0.0;
};

/// Ordered (passage id, score) list produced by the retriever or the ranker.
/// Entry order matches the sort direction of the producing operation; ids are
/// distinct within a list.
struct CandidateList {
    std::string query_id;
    std::vector<ScoredId> entries;

    size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

/// Immutable BM25 inverted index. retrieve() scores every document so its
/// output is a (possibly truncated) permutation of the corpus ids with
/// non-increasing scores, ties broken by ascending passage id.
class InvertedIndex {
public:
    static InvertedIndex build(const Corpus& corpus);  // throws DataError on empty corpus

    CandidateList retrieve(const std::vector<std::string>& query_tokens, size_t k,
                           const std::string& query_id = "") const;

    /// BM25 score of a single passage, same formula retrieve() uses.
    double score_passage(const std::vector<std::string>& query_tokens,
                         const std::string& passage_id) const;

    size_t n_docs() const { return doc_ids_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    size_t doc_length(const std::string& id) const;
    size_t document_frequency(const std::string& term) const;
    uint64_t corpus_hash() const { return corpus_hash_; }

    /// Term frequency of `term` in document `id` (0 if absent).
    size_t term_frequency(const std::string& term, const std::string& id) const;

    // On-disk cache. load() returns nullopt when the file's corpus hash does
    // not match `expected_hash` (stale cache) or the file does not exist.
    void save(const std::filesystem::path& path) const;
    static std::optional<InvertedIndex> load(const std::filesystem::path& path,
                                             uint64_t expected_hash);

private:
    struct Posting {
        uint32_t doc = 0;  // ordinal into doc_ids_
        uint32_t tf = 0;
    };

    double idf(const std::string& term) const;

    std::vector<std::string> doc_ids_;                         // ordinal -> id, ascending
    std::vector<uint32_t> doc_lengths_;                        // ordinal -> token count
    std::unordered_map<std::string, std::vector<Posting>> postings_;  // sorted by ordinal
    std::unordered_map<std::string, uint32_t> ordinal_by_id_;
    double avg_doc_len_ = 0.0;
    uint64_t corpus_hash_ = 0;
};

/// Softmax over the raw candidate scores: entries sum to 1 within 1e-9,
/// order-preserving, invariant to adding a constant to every raw score.
/// Throws DataError on an empty list.
std::vector<double> normalize_scores(const CandidateList& candidates);

/// Difficulty ordering: candidates sorted by normalized similarity ascending,
/// ties by ascending passage id. The first entry is the least similar
/// (easiest) candidate. The caller removes gold passages first. Returned
/// scores are the normalized similarities.
CandidateList sort_by_difficulty(const CandidateList& candidates);

}  // namespace genrank
