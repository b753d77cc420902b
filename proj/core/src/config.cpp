#include "genrank/config.hpp"

#include <fstream>

namespace genrank {

namespace {

std::string trim(const std::string& s) {
    size_t start = s.find_first_not_of(" \t\r");
    if (start == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r");
    return s.substr(start, end - start + 1);
}

}  // namespace

IniData parse_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());

    IniData data;
    std::string section;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            section = trim(stripped.substr(1, stripped.size() - 2));
            data[section];
            continue;
        }
        size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        data[section][key] = value;
    }
    return data;
}

std::string objective_name(Objective o) {
    switch (o) {
        case Objective::Nll: return "nll";
        case Objective::NllListMle: return "nll+listmle";
        case Objective::NllKld: return "nll+kld";
        case Objective::EncoderDistill: return "encoder";
    }
    return "?";
}

Objective parse_objective(const std::string& name) {
    if (name == "nll") return Objective::Nll;
    if (name == "nll+listmle") return Objective::NllListMle;
    if (name == "nll+kld") return Objective::NllKld;
    if (name == "encoder") return Objective::EncoderDistill;
    throw ConfigError("unknown objective '" + name + "' (nll, nll+listmle, nll+kld, encoder)");
}

std::string strategy_name(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Cps: return "cps";
        case SamplingStrategy::Random: return "random";
        case SamplingStrategy::TopN: return "topn";
    }
    return "?";
}

SamplingStrategy parse_strategy(const std::string& name) {
    if (name == "cps") return SamplingStrategy::Cps;
    if (name == "random") return SamplingStrategy::Random;
    if (name == "topn") return SamplingStrategy::TopN;
    throw ConfigError("unknown strategy '" + name + "' (cps, random, topn)");
}

void PipelineConfig::validate() const {
    if (corpus_path.empty() != examples_path.empty())
        throw ConfigError("[data] corpus and examples must be set together");
    if (corpus_path.empty()) synth.validate();
    gpe_lm.validate();
    generator_lm.validate();
    decode.validate();
    schedule.validate();
    if (retrieve_k < 1) throw ConfigError("[retriever] k must be >= 1");
    if (train.negatives_per_batch < 1) throw ConfigError("[ranker] n must be >= 1");
    if (train.step_size <= 0.0) throw ConfigError("[ranker] step_size must be > 0");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ConfigError("[eval] train_fraction must be in (0, 1)");
}

namespace {

uint64_t parse_u64(const std::string& section, const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + value + "'");
    }
}

double parse_f64(const std::string& section, const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("[" + section + "] " + key + ": expected true/false, got '" + value + "'");
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::optional<std::filesystem::path>& path,
                                    std::optional<uint64_t> seed_override) {
    PipelineConfig cfg;
    if (path) {
        IniData ini = parse_ini(*path);
        for (const auto& [section, entries] : ini) {
            for (const auto& [key, value] : entries) {
                if (section == "data") {
                    if (key == "corpus") cfg.corpus_path = value;
                    else if (key == "examples") cfg.examples_path = value;
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "synth") {
                    if (key == "n_passages") cfg.synth.n_passages = parse_u64(section, key, value);
                    else if (key == "n_queries") cfg.synth.n_queries = parse_u64(section, key, value);
                    else if (key == "n_distractors_per_query")
                        cfg.synth.n_distractors_per_query = parse_u64(section, key, value);
                    else if (key == "vocab_size") cfg.synth.vocab_size = parse_u64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "retriever") {
                    if (key == "k") cfg.retrieve_k = parse_u64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "gpe") {
                    if (key == "order") cfg.gpe_lm.order = static_cast<int>(parse_u64(section, key, value));
                    else if (key == "add_k") cfg.gpe_lm.add_k = parse_f64(section, key, value);
                    else if (key == "copy_weight") cfg.gpe_lm.copy_weight = parse_f64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "ranker") {
                    if (key == "enabled") cfg.ranker_enabled = parse_bool(section, key, value);
                    else if (key == "objective") cfg.train.objective = parse_objective(value);
                    else if (key == "strategy") cfg.train.strategy = parse_strategy(value);
                    else if (key == "n") cfg.train.negatives_per_batch = parse_u64(section, key, value);
                    else if (key == "steps") cfg.train.steps = parse_u64(section, key, value);
                    else if (key == "step_size") cfg.train.step_size = parse_f64(section, key, value);
                    else if (key == "N0") cfg.schedule.warmup_pool = parse_u64(section, key, value);
                    else if (key == "T0") cfg.schedule.warmup_steps = parse_u64(section, key, value);
                    else if (key == "T") cfg.schedule.total_steps = parse_u64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "generator") {
                    if (key == "order")
                        cfg.generator_lm.order = static_cast<int>(parse_u64(section, key, value));
                    else if (key == "add_k") cfg.generator_lm.add_k = parse_f64(section, key, value);
                    else if (key == "copy_weight")
                        cfg.generator_lm.copy_weight = parse_f64(section, key, value);
                    else if (key == "top_k_passages")
                        cfg.decode.top_k_passages = parse_u64(section, key, value);
                    else if (key == "beam_size") cfg.decode.beam_size = parse_u64(section, key, value);
                    else if (key == "max_len") cfg.decode.max_len = parse_u64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "eval") {
                    if (key == "train_fraction") cfg.train_fraction = parse_f64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else if (section == "pipeline") {
                    if (key == "seed") cfg.seed = parse_u64(section, key, value);
                    else throw ConfigError("unknown key [" + section + "] " + key);
                } else {
                    throw ConfigError("unknown config section [" + section + "]");
                }
            }
        }
    }
    if (seed_override) cfg.seed = *seed_override;
    cfg.synth.seed = cfg.seed;
    cfg.train.retrieve_k = cfg.retrieve_k;
    cfg.validate();
    return cfg;
}

const char* const kConfigReference = R"(Config file: line-oriented `key = value` with [section] headers, `#` comments.
All keys are optional; defaults shown.

[data]       corpus =            (path to a corpus TSV; synthetic benchmark when unset)
             examples =          (path to an examples JSONL; set together with corpus)
[synth]      n_passages = 600, n_queries = 80, n_distractors_per_query = 5, vocab_size = 250
[retriever]  k = 30              (candidates retrieved per query)
[gpe]        order = 2, add_k = 1.0, copy_weight = 0.5
[ranker]     enabled = true, objective = nll+listmle (nll|nll+listmle|nll+kld|encoder),
             strategy = cps (cps|random|topn), n = 5, steps = 1500, step_size = 0.1,
             N0 = 5, T0 = 500, T = 1000
[generator]  order = 2, add_k = 1.0, copy_weight = 0.5,
             top_k_passages = 15, beam_size = 3, max_len = 32
[eval]       train_fraction = 0.5
[pipeline]   seed = 7            (master seed; --seed overrides)
)";

}  // namespace genrank
