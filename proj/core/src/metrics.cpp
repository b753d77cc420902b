#include "genrank/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace genrank {

namespace {

bool is_article(const std::string& tok) { return tok == "a" || tok == "an" || tok == "the"; }

std::vector<std::string> whitespace_split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

// Lowercase and drop punctuation characters; keeps articles.
std::vector<std::string> light_normalize_tokens(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::ispunct(c)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
    return whitespace_split(cleaned);
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    std::vector<std::string> tokens = light_normalize_tokens(s);
    std::string out;
    for (const std::string& tok : tokens) {
        if (is_article(tok)) continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

double exact_match(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw DataError("exact_match: empty gold list");
    std::string p = normalize_answer(pred);
    for (const std::string& g : golds)
        if (p == normalize_answer(g)) return 1.0;
    return 0.0;
}

double unigram_f1(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw DataError("unigram_f1: empty gold list");
    std::vector<std::string> pred_tokens = whitespace_split(normalize_answer(pred));
    std::map<std::string, size_t> pred_counts;
    for (const std::string& tok : pred_tokens) ++pred_counts[tok];

    double best = 0.0;
    for (const std::string& gold : golds) {
        std::vector<std::string> gold_tokens = whitespace_split(normalize_answer(gold));
        if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
        if (pred_tokens.empty() || gold_tokens.empty()) continue;  // f1 = 0 for this gold

        std::map<std::string, size_t> gold_counts;
        for (const std::string& tok : gold_tokens) ++gold_counts[tok];
        size_t overlap = 0;
        for (const auto& [tok, count] : pred_counts) {
            auto it = gold_counts.find(tok);
            if (it != gold_counts.end()) overlap += std::min(count, it->second);
        }
        if (overlap == 0) continue;
        double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
        double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

double rouge_l(const std::string& pred, const std::string& gold) {
    std::vector<std::string> p = light_normalize_tokens(pred);
    std::vector<std::string> g = light_normalize_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;

    std::vector<std::vector<size_t>> lcs(p.size() + 1, std::vector<size_t>(g.size() + 1, 0));
    for (size_t i = 1; i <= p.size(); ++i) {
        for (size_t j = 1; j <= g.size(); ++j) {
            lcs[i][j] = p[i - 1] == g[j - 1] ? lcs[i - 1][j - 1] + 1
                                             : std::max(lcs[i - 1][j], lcs[i][j - 1]);
        }
    }
    size_t common = lcs[p.size()][g.size()];
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

double r_precision(const std::vector<std::string>& ranked_ids,
                   const std::vector<std::string>& gold_ids) {
    if (ranked_ids.empty()) return 0.0;
    return std::find(gold_ids.begin(), gold_ids.end(), ranked_ids.front()) != gold_ids.end() ? 1.0
                                                                                             : 0.0;
}

double recall_at_5(const std::vector<std::string>& ranked_ids,
                   const std::vector<std::string>& gold_ids) {
    std::unordered_set<std::string> golds(gold_ids.begin(), gold_ids.end());
    size_t top = std::min<size_t>(5, ranked_ids.size());
    for (size_t i = 0; i < top; ++i)
        if (golds.count(ranked_ids[i])) return 1.0;
    return 0.0;
}

double kilt_variant(double base_value, double rprec_hit) {
    if (base_value < 0.0 || base_value > 1.0)
        throw DataError("kilt_variant: base value outside [0, 1]");
    return base_value * rprec_hit;
}

MetricReport evaluate_predictions(const std::vector<Example>& examples,
                                  const std::vector<PredictionRecord>& predictions) {
    if (examples.empty()) throw DataError("evaluate_predictions: no examples");
    std::unordered_map<std::string, const PredictionRecord*> by_id;
    for (const PredictionRecord& rec : predictions) {
        if (!by_id.emplace(rec.example_id, &rec).second)
            throw DataError("duplicate prediction for example " + rec.example_id);
    }

    MetricReport report;
    report.per_example.reserve(examples.size());
    for (const Example& ex : examples) {
        auto it = by_id.find(ex.id);
        if (it == by_id.end()) throw DataError("missing prediction for example " + ex.id);
        const PredictionRecord& pred = *it->second;

        ExampleMetrics m;
        m.id = ex.id;
        m.r_precision = r_precision(pred.ranked_ids, ex.gold_provenance);
        m.recall_at_5 = recall_at_5(pred.ranked_ids, ex.gold_provenance);
        m.em = exact_match(pred.answer, ex.answers);
        m.f1 = unigram_f1(pred.answer, ex.answers);
        m.accuracy = m.em;
        m.rouge_l = rouge_l(pred.answer, ex.answers.front());
        m.kilt_em = kilt_variant(m.em, m.r_precision);
        m.kilt_f1 = kilt_variant(m.f1, m.r_precision);
        m.kilt_accuracy = kilt_variant(m.accuracy, m.r_precision);
        m.kilt_rouge_l = kilt_variant(m.rouge_l, m.r_precision);
        report.per_example.push_back(std::move(m));
    }

    const double n = static_cast<double>(report.per_example.size());
    for (const ExampleMetrics& m : report.per_example) {
        report.mean.r_precision += m.r_precision / n;
        report.mean.recall_at_5 += m.recall_at_5 / n;
        report.mean.em += m.em / n;
        report.mean.f1 += m.f1 / n;
        report.mean.accuracy += m.accuracy / n;
        report.mean.rouge_l += m.rouge_l / n;
        report.mean.kilt_em += m.kilt_em / n;
        report.mean.kilt_f1 += m.kilt_f1 / n;
        report.mean.kilt_accuracy += m.kilt_accuracy / n;
        report.mean.kilt_rouge_l += m.kilt_rouge_l / n;
    }
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void append_row(std::string& out, const ExampleMetrics& m) {
    out += m.id;
    for (double v : {m.r_precision, m.recall_at_5, m.em, m.f1, m.accuracy, m.rouge_l, m.kilt_em,
                     m.kilt_f1, m.kilt_accuracy, m.kilt_rouge_l}) {
        out.push_back('\t');
        out += fmt(v);
    }
    out.push_back('\n');
}

}  // namespace

std::string format_report(const MetricReport& report) {
    std::string out = "genrank-report 1\n";
    out += "n_examples = " + std::to_string(report.per_example.size()) + "\n";
    out += "[mean]\n";
    out += "r_precision = " + fmt(report.mean.r_precision) + "\n";
    out += "recall_at_5 = " + fmt(report.mean.recall_at_5) + "\n";
    out += "em = " + fmt(report.mean.em) + "\n";
    out += "f1 = " + fmt(report.mean.f1) + "\n";
    out += "accuracy = " + fmt(report.mean.accuracy) + "\n";
    out += "rouge_l = " + fmt(report.mean.rouge_l) + "\n";
    out += "kilt_em = " + fmt(report.mean.kilt_em) + "\n";
    out += "kilt_f1 = " + fmt(report.mean.kilt_f1) + "\n";
    out += "kilt_accuracy = " + fmt(report.mean.kilt_accuracy) + "\n";
    out += "kilt_rouge_l = " + fmt(report.mean.kilt_rouge_l) + "\n";
    out += "[per_example]\n";
    out +=
        "id\tr_precision\trecall_at_5\tem\tf1\taccuracy\trouge_l\tkilt_em\tkilt_f1\tkilt_accuracy\tkilt_"
        "rouge_l\n";
    for (const ExampleMetrics& m : report.per_example) append_row(out, m);
    return out;
}

void write_report(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path.string());
    out << format_report(report);
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& predictions) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions: " + path.string());
    for (const PredictionRecord& rec : predictions) {
        out << rec.example_id << '\t' << rec.answer << '\t';
        for (size_t i = 0; i < rec.ranked_ids.size(); ++i) {
            if (i) out.put(' ');
            out << rec.ranked_ids[i];
        }
        out.put('\n');
    }
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions: " + path.string());
    std::vector<PredictionRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t tab1 = line.find('\t');
        size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw DataError("malformed prediction at line " + std::to_string(line_no));
        PredictionRecord rec;
        rec.example_id = line.substr(0, tab1);
        rec.answer = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::istringstream ids(line.substr(tab2 + 1));
        std::string pid;
        while (ids >> pid) rec.ranked_ids.push_back(pid);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace genrank
