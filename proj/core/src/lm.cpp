#include "genrank/lm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace genrank {

void LmConfig::validate() const {
    if (order < 1) throw ConfigError("lm: order must be >= 1");
    if (add_k <= 0.0) throw ConfigError("lm: add_k must be > 0");
    if (copy_weight < 0.0 || copy_weight > 1.0) throw ConfigError("lm: copy_weight must be in [0, 1]");
}

CopyBag CopyBag::from_tokens(std::span<const std::string> tokens) {
    CopyBag bag;
    for (const std::string& tok : tokens) {
        ++bag.counts[tok];
        ++bag.total;
    }
    return bag;
}

double CopyBag::prob(const std::string& token, double add_k, size_t support) const {
    if (support < 1) support = 1;
    auto it = counts.find(token);
    double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    return (count + add_k) /
           (static_cast<double>(total) + add_k * static_cast<double>(support));
}

ConditionalLM::ConditionalLM(LmConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    tables_.resize(static_cast<size_t>(cfg_.order));
}

std::string ConditionalLM::context_key(std::span<const std::string> context, size_t len) {
    std::string key;
    for (size_t i = context.size() - len; i < context.size(); ++i) {
        if (!key.empty()) key.push_back('\x1f');
        key += context[i];
    }
    return key;
}

ConditionalLM ConditionalLM::train(LmConfig cfg,
                                   const std::vector<std::vector<std::string>>& sequences) {
    ConditionalLM lm(cfg);
    const size_t max_ctx = static_cast<size_t>(cfg.order) - 1;
    for (const auto& seq : sequences) {
        std::vector<std::string> padded(max_ctx, kBeginToken);
        padded.insert(padded.end(), seq.begin(), seq.end());
        for (size_t t = max_ctx; t < padded.size(); ++t) {
            lm.vocab_.insert(padded[t]);
            for (size_t len = 0; len <= max_ctx; ++len) {
                std::string key = context_key(std::span(padded.data(), t), len);
                auto& table = lm.tables_[len];
                ++table.rows[key][padded[t]];
                ++table.totals[key];
            }
        }
    }
    return lm;
}

double ConditionalLM::cond_prob(const std::string& token, std::span<const std::string> context,
                                size_t support) const {
    if (support == 0) support = vocab_.size();
    if (support < 1) support = 1;
    if (tables_.empty()) {
        return 1.0 / static_cast<double>(support);  // untrained default-constructed model
    }
    const size_t len = static_cast<size_t>(cfg_.order) - 1;
    std::string key;
    if (context.size() >= len) {
        key = context_key(context, len);
    } else {
        std::vector<std::string> padded(len - context.size(), kBeginToken);
        padded.insert(padded.end(), context.begin(), context.end());
        key = context_key(padded, len);
    }

    double count = 0.0, total = 0.0;
    const ContextTable& table = tables_[len];
    auto row_it = table.rows.find(key);
    if (row_it != table.rows.end()) {
        total = static_cast<double>(table.totals.at(key));
        auto tok_it = row_it->second.find(token);
        if (tok_it != row_it->second.end()) count = static_cast<double>(tok_it->second);
    }
    return (count + cfg_.add_k) / (total + cfg_.add_k * static_cast<double>(support));
}

size_t ConditionalLM::support_with(std::span<const std::string> extra) const {
    std::set<std::string> novel;
    for (const std::string& tok : extra)
        if (!vocab_.count(tok)) novel.insert(tok);
    return vocab_.size() + novel.size();
}

size_t ConditionalLM::support_with(const CopyBag& bag) const {
    size_t novel = 0;
    for (const auto& [tok, _] : bag.counts)
        if (!vocab_.count(tok)) ++novel;
    return vocab_.size() + novel;
}

double ConditionalLM::mixture_answer_logprob(const CopyBag& context_bag,
                                             std::span<const std::string> answer_tokens) const {
    const size_t support = support_with(context_bag);
    const double lambda = cfg_.copy_weight;
    double logprob = 0.0;
    for (size_t t = 0; t < answer_tokens.size(); ++t) {
        double copy = context_bag.prob(answer_tokens[t], cfg_.add_k, support);
        double ngram = cond_prob(answer_tokens[t], std::span(answer_tokens.data(), t), support);
        logprob += std::log(lambda * copy + (1.0 - lambda) * ngram);
    }
    return logprob;
}

// ---------------------------------------------------------------------------
// Serialization: header with order/add_k/copy_weight, then vocab rows and
// (level, context, token, count) rows. Counts are integers, so reload is exact.
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Context keys may be empty or contain the \x1f separator; encode for a
// tab-separated file.
std::string encode_key(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '\x1f')
            out += "\\;";
        else if (c == '\\')
            out += "\\\\";
        else
            out.push_back(c);
    }
    return out.empty() ? "\\0" : out;
}

std::string decode_key(const std::string& enc) {
    if (enc == "\\0") return "";
    std::string out;
    for (size_t i = 0; i < enc.size(); ++i) {
        if (enc[i] == '\\' && i + 1 < enc.size()) {
            ++i;
            out.push_back(enc[i] == ';' ? '\x1f' : enc[i]);
        } else {
            out.push_back(enc[i]);
        }
    }
    return out;
}

}  // namespace

void ConditionalLM::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path.string());
    out << "genrank-lm 1\n";
    out << "order\t" << cfg_.order << '\n';
    out << "add_k\t" << fmt_double(cfg_.add_k) << '\n';
    out << "copy_weight\t" << fmt_double(cfg_.copy_weight) << '\n';
    for (const std::string& tok : vocab_) out << "vocab\t" << tok << '\n';
    for (size_t len = 0; len < tables_.size(); ++len) {
        for (const auto& [key, row] : tables_[len].rows) {
            for (const auto& [tok, count] : row) {
                out << "count\t" << len << '\t' << encode_key(key) << '\t' << tok << '\t' << count
                    << '\n';
            }
        }
    }
}

ConditionalLM ConditionalLM::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != "genrank-lm 1")
        throw DataError("not a genrank-lm model file: " + path.string());

    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        size_t start = 0;
        for (size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == '\t') {
                fields.push_back(s.substr(start, i - start));
                start = i + 1;
            }
        }
        return fields;
    };

    LmConfig cfg;
    std::vector<std::string> vocab_rows;
    struct CountRow {
        size_t len;
        std::string key, tok;
        uint64_t count;
    };
    std::vector<CountRow> count_rows;

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split(line);
        if (f[0] == "order" && f.size() == 2) {
            cfg.order = std::stoi(f[1]);
        } else if (f[0] == "add_k" && f.size() == 2) {
            cfg.add_k = std::stod(f[1]);
        } else if (f[0] == "copy_weight" && f.size() == 2) {
            cfg.copy_weight = std::stod(f[1]);
        } else if (f[0] == "vocab" && f.size() == 2) {
            vocab_rows.push_back(f[1]);
        } else if (f[0] == "count" && f.size() == 5) {
            count_rows.push_back({static_cast<size_t>(std::stoul(f[1])), decode_key(f[2]), f[3],
                                  std::stoull(f[4])});
        } else {
            throw DataError("malformed model row at line " + std::to_string(line_no) + " in " +
                            path.string());
        }
    }

    ConditionalLM lm(cfg);
    for (auto& tok : vocab_rows) lm.vocab_.insert(std::move(tok));
    for (auto& row : count_rows) {
        if (row.len >= lm.tables_.size())
            throw DataError("model context length exceeds order in " + path.string());
        auto& table = lm.tables_[row.len];
        table.rows[row.key][row.tok] += row.count;
        table.totals[row.key] += row.count;
    }
    return lm;
}

}  // namespace genrank
