#include "genrank/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace genrank {

InvertedIndex InvertedIndex::build(const Corpus& corpus) {
    if (corpus.empty()) throw DataError("cannot build index over an empty corpus");

    InvertedIndex index;
    index.doc_ids_.reserve(corpus.size());
    for (const Passage& p : corpus) index.doc_ids_.push_back(p.id);
    std::sort(index.doc_ids_.begin(), index.doc_ids_.end());

    index.doc_lengths_.resize(index.doc_ids_.size());
    for (uint32_t ord = 0; ord < index.doc_ids_.size(); ++ord)
        index.ordinal_by_id_.emplace(index.doc_ids_[ord], ord);

    uint64_t total_len = 0;
    for (const Passage& p : corpus) {
        uint32_t ord = index.ordinal_by_id_.at(p.id);
        index.doc_lengths_[ord] = static_cast<uint32_t>(p.tokens.size());
        total_len += p.tokens.size();

        std::unordered_map<std::string, uint32_t> tf;
        for (const std::string& tok : p.tokens) ++tf[tok];
        for (const auto& [term, count] : tf) index.postings_[term].push_back({ord, count});
    }
    for (auto& [term, plist] : index.postings_)
        std::sort(plist.begin(), plist.end(),
                  [](const Posting& a, const Posting& b) { return a.doc < b.doc; });

    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(index.doc_ids_.size());
    index.corpus_hash_ = corpus_content_hash(corpus);
    return index;
}

double InvertedIndex::idf(const std::string& term) const {
    auto it = postings_.find(term);
    double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    if (df == 0.0) return 0.0;
    double n = static_cast<double>(doc_ids_.size());
    return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
}

CandidateList InvertedIndex::retrieve(const std::vector<std::string>& query_tokens, size_t k,
                                      const std::string& query_id) const {
    if (k < 1) throw DataError("retrieve: k must be >= 1");

    std::vector<double> scores(doc_ids_.size(), 0.0);
    for (const std::string& term : query_tokens) {
        double w = idf(term);
        if (w == 0.0) continue;
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        for (const Posting& post : it->second) {
            double tf = static_cast<double>(post.tf);
            double norm = kBm25K1 * (1.0 - kBm25B +
                                     kBm25B * static_cast<double>(doc_lengths_[post.doc]) / avg_doc_len_);
            scores[post.doc] += w * tf * (kBm25K1 + 1.0) / (tf + norm);
        }
    }

    std::vector<uint32_t> order(doc_ids_.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return doc_ids_[a] < doc_ids_[b];
    });

    CandidateList result;
    result.query_id = query_id;
    size_t take = std::min(k, order.size());
    result.entries.reserve(take);
    for (size_t i = 0; i < take; ++i) result.entries.push_back({doc_ids_[order[i]], scores[order[i]]});
    return result;
}

double InvertedIndex::score_passage(const std::vector<std::string>& query_tokens,
                                    const std::string& passage_id) const {
    auto ord_it = ordinal_by_id_.find(passage_id);
    if (ord_it == ordinal_by_id_.end()) throw DataError("score_passage: unknown id " + passage_id);
    uint32_t ord = ord_it->second;

    double score = 0.0;
    for (const std::string& term : query_tokens) {
        double w = idf(term);
        if (w == 0.0) continue;
        double tf = static_cast<double>(term_frequency(term, passage_id));
        if (tf == 0.0) continue;
        double norm = kBm25K1 * (1.0 - kBm25B +
                                 kBm25B * static_cast<double>(doc_lengths_[ord]) / avg_doc_len_);
        score += w * tf * (kBm25K1 + 1.0) / (tf + norm);
    }
    return score;
}

size_t InvertedIndex::doc_length(const std::string& id) const {
    auto it = ordinal_by_id_.find(id);
    if (it == ordinal_by_id_.end()) throw DataError("doc_length: unknown id " + id);
    return doc_lengths_[it->second];
}

size_t InvertedIndex::document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

size_t InvertedIndex::term_frequency(const std::string& term, const std::string& id) const {
    auto ord_it = ordinal_by_id_.find(id);
    if (ord_it == ordinal_by_id_.end()) return 0;
    auto it = postings_.find(term);
    if (it == postings_.end()) return 0;
    const auto& plist = it->second;
    auto pos = std::lower_bound(plist.begin(), plist.end(), ord_it->second,
                                [](const Posting& p, uint32_t ord) { return p.doc < ord; });
    if (pos == plist.end() || pos->doc != ord_it->second) return 0;
    return pos->tf;
}

// ---------------------------------------------------------------------------
// Index cache
// ---------------------------------------------------------------------------

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write index cache: " + path.string());
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(corpus_hash_));
    out << "genrank-index 1\n";
    out << "corpus_hash " << hex << '\n';
    out << "n_docs " << doc_ids_.size() << '\n';
    for (size_t i = 0; i < doc_ids_.size(); ++i)
        out << "doc " << doc_ids_[i] << ' ' << doc_lengths_[i] << '\n';

    std::vector<std::string> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(term);
    std::sort(terms.begin(), terms.end());
    for (const std::string& term : terms) {
        out << "post " << term;
        for (const Posting& p : postings_.at(term)) out << ' ' << p.doc << ':' << p.tf;
        out << '\n';
    }
}

std::optional<InvertedIndex> InvertedIndex::load(const std::filesystem::path& path,
                                                 uint64_t expected_hash) {
    std::ifstream in(path);
    if (!in) return std::nullopt;

    std::string word;
    in >> word;
    if (word != "genrank-index") throw DataError("not an index cache: " + path.string());
    int version = 0;
    in >> version;
    if (version != 1) throw DataError("unsupported index cache version");

    in >> word;  // "corpus_hash"
    std::string hex;
    in >> hex;
    uint64_t stored = 0;
    try {
        stored = std::stoull(hex, nullptr, 16);
    } catch (const std::exception&) {
        throw DataError("malformed index cache hash: " + path.string());
    }
    if (stored != expected_hash) return std::nullopt;  // stale cache

    InvertedIndex index;
    index.corpus_hash_ = stored;
    size_t n_docs;
    in >> word >> n_docs;
    if (word != "n_docs") throw DataError("malformed index cache: " + path.string());

    uint64_t total_len = 0;
    index.doc_ids_.reserve(n_docs);
    index.doc_lengths_.reserve(n_docs);
    for (size_t i = 0; i < n_docs; ++i) {
        std::string id;
        uint32_t len;
        in >> word >> id >> len;
        if (word != "doc") throw DataError("malformed index cache: " + path.string());
        index.ordinal_by_id_.emplace(id, static_cast<uint32_t>(index.doc_ids_.size()));
        index.doc_ids_.push_back(std::move(id));
        index.doc_lengths_.push_back(len);
        total_len += len;
    }
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(n_docs);

    std::string line;
    std::getline(in, line);  // finish current line
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("post ", 0) != 0) throw DataError("malformed index cache: " + path.string());
        size_t term_end = line.find(' ', 5);
        std::string term = line.substr(5, term_end == std::string::npos ? std::string::npos : term_end - 5);
        std::vector<Posting> plist;
        size_t pos = term_end;
        while (pos != std::string::npos && pos < line.size()) {
            size_t next = line.find(' ', pos + 1);
            std::string cell = line.substr(pos + 1, next == std::string::npos ? std::string::npos
                                                                              : next - pos - 1);
            size_t colon = cell.find(':');
            if (colon == std::string::npos)
                throw DataError("malformed index cache posting: " + cell);
            plist.push_back({static_cast<uint32_t>(std::stoul(cell.substr(0, colon))),
                             static_cast<uint32_t>(std::stoul(cell.substr(colon + 1)))});
            pos = next;
        }
        index.postings_.emplace(std::move(term), std::move(plist));
    }
    return index;
}

// ---------------------------------------------------------------------------
// Normalization and difficulty ordering
// ---------------------------------------------------------------------------

std::vector<double> normalize_scores(const CandidateList& candidates) {
    if (candidates.empty()) throw DataError("normalize_scores: empty candidate list");
    double max_score = candidates.entries[0].score;
    for (const ScoredId& e : candidates.entries) max_score = std::max(max_score, e.score);
    double denom = 0.0;
    std::vector<double> out(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        out[i] = std::exp(candidates.entries[i].score - max_score);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

CandidateList sort_by_difficulty(const CandidateList& candidates) {
    CandidateList sorted;
    sorted.query_id = candidates.query_id;
    if (candidates.empty()) return sorted;

    std::vector<double> norm = normalize_scores(candidates);
    sorted.entries.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
        sorted.entries.push_back({candidates.entries[i].id, norm[i]});
    std::sort(sorted.entries.begin(), sorted.entries.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.id < b.id;
    });
    return sorted;
}

}  // namespace genrank
