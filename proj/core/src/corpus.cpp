#include "genrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "genrank/rng.hpp"

namespace genrank {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Passage Passage::make(std::string id, std::string title, std::string text) {
    Passage p;
    p.id = std::move(id);
    p.title = std::move(title);
    p.text = std::move(text);
    p.tokens = tokenize(p.title + " " + p.text);
    return p;
}

void Corpus::add(Passage p) {
    auto [it, inserted] = by_id_.emplace(p.id, passages_.size());
    if (!inserted) throw DataError("duplicate passage id: " + p.id);
    passages_.push_back(std::move(p));
}

const Passage& Corpus::at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw DataError("unknown passage id: " + id);
    return passages_[it->second];
}

const Passage* Corpus::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

namespace {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr uint64_t kFnvPrime = 0x100000001b3ull;

void fnv_mix(uint64_t& h, std::string_view s) {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    h ^= 0xff;  // field separator
    h *= kFnvPrime;
}

}  // namespace

uint64_t corpus_content_hash(const Corpus& corpus) {
    uint64_t h = kFnvOffset;
    for (const Passage& p : corpus) {
        fnv_mix(h, p.id);
        fnv_mix(h, p.title);
        fnv_mix(h, p.text);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Examples file (JSON Lines)
// ---------------------------------------------------------------------------

std::vector<Example> load_examples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open examples file: " + path.string());

    std::vector<Example> examples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("parse error at line " + std::to_string(line_no) + ": " + e.what());
        }
        auto require = [&](const char* field) -> const nlohmann::json& {
            auto it = rec.find(field);
            if (it == rec.end())
                throw DataError("schema error at line " + std::to_string(line_no) +
                                ": missing field '" + field + "'");
            return *it;
        };
        try {
            Example ex;
            ex.id = require("id").get<std::string>();
            ex.query = require("query").get<std::string>();
            ex.answers = require("answers").get<std::vector<std::string>>();
            ex.gold_provenance = require("provenance").get<std::vector<std::string>>();
            if (ex.answers.empty())
                throw DataError("schema error at line " + std::to_string(line_no) +
                                ": 'answers' must be non-empty");
            if (ex.gold_provenance.empty())
                throw DataError("schema error at line " + std::to_string(line_no) +
                                ": 'provenance' must be non-empty");
            examples.push_back(std::move(ex));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("schema error at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return examples;
}

void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write examples file: " + path.string());
    for (const Example& ex : examples) {
        nlohmann::json rec;
        rec["id"] = ex.id;
        rec["query"] = ex.query;
        rec["answers"] = ex.answers;
        rec["provenance"] = ex.gold_provenance;
        out << rec.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Corpus file (TSV with \t, \n, \\ escapes)
// ---------------------------------------------------------------------------

namespace {

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_field(const std::string& s, size_t line_no) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 1 >= s.size())
            throw DataError("malformed row at line " + std::to_string(line_no) +
                            ": dangling escape");
        ++i;
        switch (s[i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            default:
                throw DataError("malformed row at line " + std::to_string(line_no) +
                                ": unknown escape \\" + std::string(1, s[i]));
        }
    }
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != "id\ttitle\ttext")
        throw DataError("corpus file missing 'id\\ttitle\\ttext' header: " + path.string());

    Corpus corpus;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw DataError("malformed row at line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        corpus.add(Passage::make(unescape_field(fields[0], line_no), unescape_field(fields[1], line_no),
                                 unescape_field(fields[2], line_no)));
    }
    return corpus;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    out << "id\ttitle\ttext\n";
    for (const Passage& p : corpus) {
        out << escape_field(p.id) << '\t' << escape_field(p.title) << '\t' << escape_field(p.text)
            << '\n';
    }
}

void validate_provenance(const Corpus& corpus, const std::vector<Example>& examples) {
    for (const Example& ex : examples) {
        for (const std::string& pid : ex.gold_provenance) {
            if (!corpus.contains(pid))
                throw DataError("example " + ex.id + ": gold provenance id '" + pid +
                                "' not found in corpus");
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
    if (n_passages < 1 || n_queries < 1 || n_distractors_per_query < 1 || vocab_size < 1)
        throw ConfigError("synth: all counts must be >= 1");
    if (n_distractors_per_query >= n_passages)
        throw ConfigError("synth: n_distractors_per_query must be < n_passages");
    if (n_queries * (1 + n_distractors_per_query) > n_passages)
        throw ConfigError("synth: n_passages too small for n_queries * (1 + n_distractors_per_query)");
    if (vocab_size < 2 * kQueryTerms)
        throw ConfigError("synth: vocab_size must be >= " + std::to_string(2 * kQueryTerms));
}

namespace {

std::string zero_pad(size_t value, size_t width) {
    std::string s = std::to_string(value);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace

SyntheticData make_synthetic(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const size_t id_width = std::to_string(config.n_passages).size();
    std::vector<std::string> vocab(config.vocab_size);
    for (size_t i = 0; i < config.vocab_size; ++i) vocab[i] = "w" + zero_pad(i, 4);

    // Answer tokens live in their own vocabulary so an answer can only ever be
    // found inside its gold passage. Queries cycle through the answer
    // vocabulary, keeping answer frequencies balanced between the train and
    // eval halves.
    const size_t answer_vocab_size = std::max<size_t>(8, config.vocab_size / 25);
    std::vector<std::string> answer_vocab(answer_vocab_size);
    for (size_t i = 0; i < answer_vocab_size; ++i) answer_vocab[i] = "ans" + zero_pad(i, 3);

    // Shuffled id assignment so passage roles are uncorrelated with id order
    // (several components break score ties by ascending id).
    std::vector<size_t> id_slots(config.n_passages);
    for (size_t i = 0; i < config.n_passages; ++i) id_slots[i] = i;
    rng.shuffle(id_slots);
    size_t next_slot = 0;
    auto next_id = [&]() { return "p" + zero_pad(id_slots[next_slot++], id_width); };

    auto sample_background = [&](const std::vector<std::string>& forbidden, size_t count) {
        std::vector<std::string> out;
        out.reserve(count);
        while (out.size() < count) {
            const std::string& w = vocab[rng.below(vocab.size())];
            if (std::find(forbidden.begin(), forbidden.end(), w) == forbidden.end())
                out.push_back(w);
        }
        return out;
    };

    SyntheticData data;
    for (size_t qi = 0; qi < config.n_queries; ++qi) {
        // Query: distinct main-vocabulary terms.
        std::vector<std::string> query_terms;
        for (size_t idx : rng.sample_indices(vocab.size(), kQueryTerms))
            query_terms.push_back(vocab[idx]);
        const std::string answer = answer_vocab[qi % answer_vocab.size()];

        // Gold: keeps a contiguous run of query terms (so query bigrams
        // survive) and carries the answer verbatim (twice, so the copy signal
        // survives fusion over many passages). Every passage is exactly
        // kSynthPassageLen tokens, so length carries no signal anywhere.
        const size_t gold_run = kQueryTerms / 2;
        std::vector<std::string> gold_tokens = sample_background(query_terms, 2);
        for (size_t i = 0; i < gold_run; ++i) gold_tokens.push_back(query_terms[i]);
        gold_tokens.push_back(answer);
        for (auto& w : sample_background(query_terms, kSynthPassageLen - gold_tokens.size() - 1))
            gold_tokens.push_back(w);
        gold_tokens.push_back(answer);

        Passage gold = Passage::make(next_id(), "", join(gold_tokens));
        const std::string gold_id = gold.id;
        data.roles[gold_id] = SynthRole::Gold;
        data.corpus.add(std::move(gold));

        Example ex;
        ex.id = "q" + zero_pad(qi, 4);
        ex.query = join(query_terms);
        ex.answers = {answer};
        ex.gold_provenance = {gold_id};
        data.examples.push_back(std::move(ex));

        // Distractors: more query terms than the gold passage, but shuffled and
        // interleaved with background words so no query bigram survives, and no
        // answer token.
        for (size_t d = 0; d < config.n_distractors_per_query; ++d) {
            size_t n_terms = gold_run + 2 + rng.below(kQueryTerms - gold_run - 1);  // in [run+2, |q|]
            std::vector<size_t> pick = rng.sample_indices(kQueryTerms, n_terms);
            std::vector<std::string> terms;
            for (size_t idx : pick) terms.push_back(query_terms[idx]);

            std::vector<std::string> fill = sample_background(query_terms, kSynthPassageLen - n_terms);
            std::vector<std::string> toks;
            for (size_t i = 0; i < terms.size(); ++i) {
                toks.push_back(fill[i]);
                toks.push_back(terms[i]);
            }
            for (size_t i = terms.size(); i < fill.size(); ++i) toks.push_back(fill[i]);
            Passage distractor = Passage::make(next_id(), "", join(toks));
            data.roles[distractor.id] = SynthRole::Distractor;
            data.corpus.add(std::move(distractor));
        }
    }

    // Background passages fill the remaining slots. A small fraction carry a
    // random answer token, so answers also hide in passages with no query
    // overlap.
    while (data.corpus.size() < config.n_passages) {
        std::vector<std::string> toks = sample_background({}, kSynthPassageLen);
        if (rng.below(100) < 15)
            toks[rng.below(toks.size())] = answer_vocab[rng.below(answer_vocab.size())];
        Passage background = Passage::make(next_id(), "", join(toks));
        data.roles[background.id] = SynthRole::Background;
        data.corpus.add(std::move(background));
    }
    return data;
}

}  // namespace genrank
