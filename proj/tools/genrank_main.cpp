// genrank CLI: retrieve, distill, generate and evaluate on a benchmark.
//
// Subcommands mirror the pipeline stages; `pipeline` runs them all and
// `ablate` sweeps the objective/strategy grid. Exit codes: 0 success,
// 1 config error, 2 data error, 3 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genrank/errors.hpp"
#include "genrank/pipeline.hpp"

namespace {

struct GlobalArgs {
    std::optional<std::filesystem::path> config;
    std::optional<uint64_t> seed;
    std::filesystem::path out = "out";
};

genrank::PipelineConfig load_config(const GlobalArgs& args) {
    return genrank::PipelineConfig::load(args.config, args.seed);
}

void print_report_summary(const genrank::MetricReport& report) {
    const auto& m = report.mean;
    std::printf("examples: %zu\n", report.per_example.size());
    std::printf("r_precision %.4f  recall_at_5 %.4f\n", m.r_precision, m.recall_at_5);
    std::printf("em %.4f  f1 %.4f  accuracy %.4f  rouge_l %.4f\n", m.em, m.f1, m.accuracy,
                m.rouge_l);
    std::printf("kilt_em %.4f  kilt_f1 %.4f  kilt_accuracy %.4f  kilt_rouge_l %.4f\n", m.kilt_em,
                m.kilt_f1, m.kilt_accuracy, m.kilt_rouge_l);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"genrank: passage retrieval, distillation-trained reranking, and fused answer generation"};
    app.require_subcommand(1);
    app.footer(genrank::kConfigReference);

    GlobalArgs args;
    std::string config_path;
    app.add_option("--config", config_path, "Config file (key = value sections; see footer)");
    app.add_option("--seed", args.seed, "Master seed; overrides [pipeline] seed");
    app.add_option("--out", args.out, "Artifact directory (default: out)");

    app.add_subcommand("synth", "Generate (or ingest) the dataset and write the train/eval split")
        ->fallthrough();
    app.add_subcommand("index", "Build the retrieval index cache for the corpus")->fallthrough();
    app.add_subcommand("train-gpe", "Train the generative passage estimator on the train split")
        ->fallthrough();
    app.add_subcommand("distill", "Train the passage ranker under the configured objective")
        ->fallthrough();
    app.add_subcommand("generate", "Train the generator and decode answers for the eval split")
        ->fallthrough();
    app.add_subcommand("eval", "Score predictions and write the metric report")->fallthrough();
    app.add_subcommand("pipeline", "Run every stage in order")->fallthrough();
    app.add_subcommand("ablate", "Run the objective x strategy ablation grid")->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (!config_path.empty()) args.config = config_path;

    try {
        genrank::PipelineConfig cfg = load_config(args);
        const std::filesystem::path& out = args.out;
        std::filesystem::create_directories(out);

        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "synth") {
            genrank::stage_synth(cfg, out);
            std::printf("wrote %s, %s, %s\n", genrank::artifacts::kCorpus,
                        genrank::artifacts::kTrainExamples, genrank::artifacts::kEvalExamples);
        } else if (name == "index") {
            genrank::stage_index(cfg, out);
            std::printf("wrote %s\n", genrank::artifacts::kIndex);
        } else if (name == "train-gpe") {
            genrank::stage_train_gpe(cfg, out);
            std::printf("wrote %s\n", genrank::artifacts::kGpeModel);
        } else if (name == "distill") {
            genrank::stage_distill(cfg, out);
            std::printf("wrote %s\n", genrank::artifacts::kRankerModel);
        } else if (name == "generate") {
            genrank::stage_generate(cfg, out);
            std::printf("wrote %s, %s\n", genrank::artifacts::kGeneratorModel,
                        genrank::artifacts::kPredictions);
        } else if (name == "eval") {
            genrank::MetricReport report = genrank::stage_eval(cfg, out);
            print_report_summary(report);
            std::printf("wrote %s\n", genrank::artifacts::kReport);
        } else if (name == "pipeline") {
            genrank::PipelineResult result = genrank::run_pipeline(cfg, out);
            print_report_summary(result.report);
            std::printf("wrote %s\n", result.report_path.string().c_str());
        } else if (name == "ablate") {
            auto results = genrank::run_ablate(cfg, out);
            for (const auto& [cell, report] : results)
                std::printf("%-22s r_precision %.4f  em %.4f  kilt_em %.4f\n", cell.c_str(),
                            report.mean.r_precision, report.mean.em, report.mean.kilt_em);
            std::printf("wrote %s/ablate/report_<cell>.txt\n", out.string().c_str());
        }
    } catch (const genrank::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const genrank::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const genrank::StageError& e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
