// featdiag command-line entry point: golden / diagnose / generate / evaluate /
// predict subcommands over a JSON run config, with flag overrides.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "featdiag/featdiag.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<int> trials;
    std::optional<int> shots;
    std::optional<std::string> sampling;
    std::optional<std::string> corruption;
    std::vector<std::string> levels;
};

void add_common_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "run config JSON")->required();
    cmd->add_option("--out", ov.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", ov.seed, "base seed (overrides config)");
    cmd->add_option("--backend", ov.backend, "http or replay (overrides config)");
    cmd->add_option("--trials", ov.trials, "trial count (overrides config)");
    cmd->add_option("--shots", ov.shots, "few-shot example count (overrides config)");
    cmd->add_option("--sampling", ov.sampling, "random, best or worst (overrides config)");
    cmd->add_option("--corruption", ov.corruption,
                    "none, shuffle_names, mask_descriptions, mix_values or reorder_variables");
    cmd->add_option("--level", ov.levels, "diagnosis level (repeatable: L1 L2 L3)");
}

featdiag::RunConfig resolve(const Overrides& ov) {
    featdiag::RunConfig cfg = featdiag::load_config(ov.config_path);
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.seed) cfg.base_seed = *ov.seed;
    if (ov.backend) cfg.gateway.backend = featdiag::to_lower(*ov.backend);
    if (ov.trials) cfg.trials = *ov.trials;
    if (ov.shots) cfg.shots = *ov.shots;
    if (ov.sampling) cfg.sampling = featdiag::sampling_from_string(*ov.sampling);
    if (ov.corruption) cfg.corruption = featdiag::corruption_from_string(*ov.corruption);
    if (!ov.levels.empty()) {
        cfg.levels.clear();
        for (const auto& l : ov.levels) cfg.levels.push_back(featdiag::level_from_string(l));
    }
    return cfg;
}

// exit 2: configuration or IO problems; exit 1: the pipeline itself failed
int exit_code_for(const featdiag::Error& e) {
    if (dynamic_cast<const featdiag::ConfigError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const featdiag::SchemaMismatch*>(&e) != nullptr) return 2;
    if (dynamic_cast<const featdiag::EmptyDataset*>(&e) != nullptr) return 2;
    if (dynamic_cast<const featdiag::NonBinaryTarget*>(&e) != nullptr) return 2;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-level robustness diagnosis and evaluation for LLM feature engineering"};
    app.require_subcommand(1);

    Overrides ov;
    auto* golden = app.add_subcommand("golden", "compute the golden profile");
    auto* diagnose = app.add_subcommand("diagnose", "run the multi-level reliability diagnosis");
    auto* generate = app.add_subcommand("generate", "generate feature sets via the LLM gateway");
    auto* evaluate = app.add_subcommand("evaluate", "score generated feature sets and select a subset");
    auto* predict = app.add_subcommand("predict", "train, ensemble and report test AUROC");
    for (auto* cmd : {golden, diagnose, generate, evaluate, predict}) add_common_options(cmd, ov);

    CLI11_PARSE(app, argc, argv);

    try {
        featdiag::RunConfig cfg = resolve(ov);
        if (golden->parsed()) featdiag::cmd_golden(cfg);
        else if (diagnose->parsed()) featdiag::cmd_diagnose(cfg);
        else if (generate->parsed()) featdiag::cmd_generate(cfg);
        else if (evaluate->parsed()) featdiag::cmd_evaluate(cfg);
        else if (predict->parsed()) featdiag::cmd_predict(cfg);
        return 0;
    } catch (const featdiag::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
