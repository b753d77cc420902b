#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "genrank/errors.hpp"

namespace genrank {

/// Lowercased tokens split on any run of non-alphanumeric characters.
/// Deterministic; empty input yields an empty sequence. Idempotent on its own
/// output joined by single spaces.
std::vector<std::string> tokenize(std::string_view text);

/// A corpus unit. `tokens` is derived as tokenize(title + " " + text) and is
/// what every scoring component (index, features, copy distributions) sees.
struct Passage {
    std::string id;
    std::string title;
    std::string text;
    std::vector<std::string> tokens;

    static Passage make(std::string id, std::string title, std::string text);
};

/// A (query, answers, gold provenance) record. `answers` is an alias list
/// (metrics aggregate with max over aliases); `gold_provenance` holds the ids
/// of passages annotated as evidence, all of which must resolve in the corpus.
struct Example {
    std::string id;
    std::string query;
    std::vector<std::string> answers;
    std::vector<std::string> gold_provenance;
};

/// Id-indexed passage collection. Lookup by id is total over stored ids;
/// immutable once loaded, safe to share across concurrent readers.
class Corpus {
public:
    void add(Passage p);  // throws DataError on duplicate id

    size_t size() const { return passages_.size(); }
    bool empty() const { return passages_.empty(); }
    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
    const Passage& at(const std::string& id) const;  // throws DataError if absent
    const Passage* find(const std::string& id) const;

    const std::vector<Passage>& passages() const { return passages_; }
    auto begin() const { return passages_.begin(); }
    auto end() const { return passages_.end(); }

private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, size_t> by_id_;
};

/// FNV-1a hash over every passage's (id, title, text). Used to invalidate the
/// on-disk retrieval index cache when the corpus content changes.
uint64_t corpus_content_hash(const Corpus& corpus);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------
//
// Examples file: UTF-8 JSON Lines, one object per line with fields
//   {"id": str, "query": str, "answers": [str, ...], "provenance": [str, ...]}
// where answers and provenance are non-empty.
//
// Corpus file: UTF-8 TSV with header line `id<TAB>title<TAB>text`. Literal
// tabs and newlines in fields are escaped as \t and \n, backslash as \\, so
// round-trips are byte-exact.

std::vector<Example> load_examples(const std::filesystem::path& path);
void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Checks that every gold provenance id of every example resolves in the corpus.
void validate_provenance(const Corpus& corpus, const std::vector<Example>& examples);

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

/// Terms per synthetic query.
inline constexpr size_t kQueryTerms = 6;

/// Exact token length of every synthetic passage (uniform across roles, so
/// passage length carries no signal).
inline constexpr size_t kSynthPassageLen = 14;

struct SynthConfig {
    size_t n_passages = 600;
    size_t n_queries = 80;
    size_t n_distractors_per_query = 5;
    size_t vocab_size = 250;
    uint64_t seed = 7;

    void validate() const;  // throws ConfigError
};

enum class SynthRole { Gold, Distractor, Background };

struct SyntheticData {
    Corpus corpus;
    std::vector<Example> examples;
    std::unordered_map<std::string, SynthRole> roles;  // passage id -> construction role
};

/// Deterministic benchmark generator. For every query it plants:
///   - one gold passage containing a contiguous run of query terms plus the
///     answer token (twice), drawn from a reserved answer vocabulary;
///   - n_distractors_per_query distractors that contain more query terms than
///     the gold passage but scattered so that no query bigram survives, and
///     never any answer token;
///   - random background passages filling the rest of the corpus, some of
///     which carry a random answer token (so an answer can hide in a passage
///     with no query overlap).
/// All roles share one passage-length band. Distractors outscore the gold
/// passage under bag-of-words retrieval while carrying no evidence, which is
/// the failure mode the ranker is trained to fix. Pure function of the
/// config: same config, byte-identical output.
SyntheticData make_synthetic(const SynthConfig& config);

}  // namespace genrank
