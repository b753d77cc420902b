#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "genrank/corpus.hpp"
#include "genrank/generator.hpp"
#include "genrank/lm.hpp"
#include "genrank/ranker.hpp"

namespace genrank {

/// Line-oriented `key = value` configuration with `[section]` headers and `#`
/// comments. Unknown sections or keys are configuration errors.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini(const std::filesystem::path& path);  // throws ConfigError

std::string objective_name(Objective o);
Objective parse_objective(const std::string& name);
std::string strategy_name(SamplingStrategy s);
SamplingStrategy parse_strategy(const std::string& name);

/// Every stage's settings in one place. Defaults document the frozen
/// benchmark configuration; a config file overrides them per key.
struct PipelineConfig {
    // [data] — optional external dataset; when unset the synthetic benchmark is generated
    std::string corpus_path;
    std::string examples_path;

    // [synth]
    SynthConfig synth;

    // [retriever]
    size_t retrieve_k = 30;

    // [gpe]
    LmConfig gpe_lm;  // order=2, add_k=1, copy_weight=0.5

    // [ranker]
    bool ranker_enabled = true;
    TrainOptions train;
    CurriculumSchedule schedule;

    // [generator]
    LmConfig generator_lm;
    DecodeConfig decode;

    // [eval]
    double train_fraction = 0.5;

    // [pipeline]
    uint64_t seed = 7;

    void validate() const;

    /// Loads a config file (all keys optional) and applies the seed override.
    static PipelineConfig load(const std::optional<std::filesystem::path>& path,
                               std::optional<uint64_t> seed_override);
};

/// Reference text for --help: every config key with its default.
extern const char* const kConfigReference;

}  // namespace genrank
