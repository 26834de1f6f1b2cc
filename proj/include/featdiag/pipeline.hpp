#pragma once

#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdiag/data_model.hpp"
#include "featdiag/example_sampler.hpp"
#include "featdiag/golden_stats.hpp"
#include "featdiag/llm_gateway.hpp"
#include "featdiag/predictor.hpp"
#include "featdiag/prompt_engine.hpp"
#include "featdiag/response_parser.hpp"
#include "featdiag/scorer.hpp"

namespace featdiag {

// ---------------------------------------------------------------------------
// run configuration

struct GatewayConfig {
    std::string backend = "replay"; // http | replay
    std::string endpoint_url;
    std::string model_name = "gpt-3.5-turbo";
    std::string api_key_env = "FEATDIAG_API_KEY";
    std::string transcript_path; // http: JSONL record target
    std::string replay_path;     // replay: JSONL store
    double temperature = 0.5;
    int max_tokens = 1024;
    int max_inflight = 4;
    int max_attempts = 5;
    int base_delay_ms = 1000;
};

struct SelectionConfig {
    SelectionMode mode = SelectionMode::TopK;
    int k = 3;
};

struct RunConfig {
    std::string dataset_path;
    std::string schema_path;
    GatewayConfig gateway;
    std::vector<Level> levels = {Level::L1, Level::L2, Level::L3};
    int trials = 1;
    int shots = 4;
    SamplingStrategy sampling = SamplingStrategy::Random;
    bool class_balance = false;
    CorruptionKind corruption = CorruptionKind::None;
    DescriptionDetail description_detail = DescriptionDetail::Full;
    int n_feature_sets = 10;
    SelectionConfig selection;
    uint64_t base_seed = 0;
    std::string out_dir = "out";
    std::string template_dir;
};

// ---------------------------------------------------------------------------
// enum <-> string for config and CLI

inline Level level_from_string(const std::string& raw) {
    std::string s = to_lower(trim(raw));
    if (s == "l1" || s == "1") return Level::L1;
    if (s == "l2" || s == "2") return Level::L2;
    if (s == "l3" || s == "3") return Level::L3;
    if (s == "feature_gen" || s == "featuregen" || s == "gen") return Level::FeatureGen;
    throw ConfigError("unknown level: " + raw);
}

inline SamplingStrategy sampling_from_string(const std::string& raw) {
    std::string s = to_lower(trim(raw));
    if (s == "random") return SamplingStrategy::Random;
    if (s == "best") return SamplingStrategy::Best;
    if (s == "worst") return SamplingStrategy::Worst;
    throw ConfigError("unknown sampling strategy: " + raw);
}

inline CorruptionKind corruption_from_string(const std::string& raw) {
    std::string s = to_lower(trim(raw));
    if (s == "none") return CorruptionKind::None;
    if (s == "shuffle_names") return CorruptionKind::ShuffleVariableNames;
    if (s == "mask_descriptions") return CorruptionKind::MaskDescriptions;
    if (s == "mix_values") return CorruptionKind::MixValues;
    if (s == "reorder_variables") return CorruptionKind::ReorderVariables;
    throw ConfigError("unknown corruption: " + raw);
}

inline DescriptionDetail detail_from_string(const std::string& raw) {
    std::string s = to_lower(trim(raw));
    if (s == "full") return DescriptionDetail::Full;
    if (s == "name_only" || s == "nameonly") return DescriptionDetail::NameOnly;
    throw ConfigError("unknown description detail: " + raw);
}

inline SelectionMode selection_mode_from_string(const std::string& raw) {
    std::string s = to_lower(trim(raw));
    if (s == "topk" || s == "top_k" || s == "top") return SelectionMode::TopK;
    if (s == "dropk" || s == "drop_k" || s == "drop") return SelectionMode::DropK;
    throw ConfigError("unknown selection mode: " + raw);
}

inline std::string selection_mode_name(SelectionMode m) {
    return m == SelectionMode::TopK ? "topk" : "dropk";
}

// ---------------------------------------------------------------------------
// config loading

namespace detail {

inline std::string resolve_relative(const std::filesystem::path& base, const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (base / p).string();
}

} // namespace detail

// Reads a JSON run config; relative paths resolve against the config file's
// directory so a config directory is self-contained.
inline RunConfig load_config(const std::string& config_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
    }
    const std::filesystem::path base = std::filesystem::path(config_path).parent_path();

    RunConfig cfg;
    cfg.dataset_path = detail::resolve_relative(base, doc.value("dataset", std::string()));
    cfg.schema_path = detail::resolve_relative(base, doc.value("schema", std::string()));
    if (doc.contains("gateway")) {
        const auto& g = doc["gateway"];
        cfg.gateway.endpoint_url = g.value("endpoint_url", std::string());
        cfg.gateway.model_name = g.value("model_name", cfg.gateway.model_name);
        cfg.gateway.api_key_env = g.value("api_key_env", cfg.gateway.api_key_env);
        cfg.gateway.transcript_path = detail::resolve_relative(base, g.value("transcript_path", std::string()));
        cfg.gateway.replay_path = detail::resolve_relative(base, g.value("replay_path", std::string()));
        cfg.gateway.temperature = g.value("temperature", cfg.gateway.temperature);
        cfg.gateway.max_tokens = g.value("max_tokens", cfg.gateway.max_tokens);
        cfg.gateway.max_inflight = g.value("max_inflight", cfg.gateway.max_inflight);
        cfg.gateway.max_attempts = g.value("max_attempts", cfg.gateway.max_attempts);
        cfg.gateway.base_delay_ms = g.value("base_delay_ms", cfg.gateway.base_delay_ms);
    }
    cfg.gateway.backend = to_lower(doc.value("backend", cfg.gateway.backend));
    if (doc.contains("levels")) {
        cfg.levels.clear();
        for (const auto& l : doc["levels"]) cfg.levels.push_back(level_from_string(l.get<std::string>()));
    }
    cfg.trials = doc.value("trials", cfg.trials);
    cfg.shots = doc.value("shots", cfg.shots);
    if (doc.contains("sampling")) cfg.sampling = sampling_from_string(doc["sampling"].get<std::string>());
    cfg.class_balance = doc.value("class_balance", cfg.class_balance);
    if (doc.contains("corruption")) cfg.corruption = corruption_from_string(doc["corruption"].get<std::string>());
    if (doc.contains("description_detail"))
        cfg.description_detail = detail_from_string(doc["description_detail"].get<std::string>());
    cfg.n_feature_sets = doc.value("n_feature_sets", cfg.n_feature_sets);
    if (doc.contains("selection")) {
        cfg.selection.mode = selection_mode_from_string(doc["selection"].value("mode", "topk"));
        cfg.selection.k = doc["selection"].value("k", cfg.selection.k);
    }
    cfg.base_seed = doc.value("base_seed", cfg.base_seed);
    cfg.out_dir = detail::resolve_relative(base, doc.value("out_dir", cfg.out_dir));
    cfg.template_dir = detail::resolve_relative(base, doc.value("template_dir", std::string()));
    return cfg;
}

inline void validate_config(const RunConfig& cfg) {
    if (cfg.dataset_path.empty() || cfg.schema_path.empty())
        throw ConfigError("config needs 'dataset' and 'schema' paths");
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.shots < 0) throw ConfigError("shots must be >= 0");
    if (cfg.class_balance && cfg.shots % 2 != 0)
        throw ConfigError("class_balance needs an even shot count");
    if (cfg.n_feature_sets < 1) throw ConfigError("n_feature_sets must be >= 1");
    if (cfg.selection.k < 0) throw ConfigError("selection.k must be >= 0");
    if (cfg.gateway.backend != "http" && cfg.gateway.backend != "replay")
        throw ConfigError("backend must be 'http' or 'replay'");
    if (cfg.gateway.backend == "replay" && cfg.gateway.replay_path.empty())
        throw ConfigError("replay backend needs gateway.replay_path");
}

inline std::unique_ptr<CompletionBackend> make_backend(const RunConfig& cfg) {
    if (cfg.gateway.backend == "replay")
        return std::make_unique<ReplayBackend>(ReplayStore::load(cfg.gateway.replay_path));
    HttpGatewayConfig http;
    http.endpoint_url = cfg.gateway.endpoint_url;
    http.api_key_env = cfg.gateway.api_key_env;
    http.transcript_path = cfg.gateway.transcript_path;
    http.max_attempts = cfg.gateway.max_attempts;
    http.base_delay_ms = cfg.gateway.base_delay_ms;
    http.max_inflight = cfg.gateway.max_inflight;
    return std::make_unique<HttpBackend>(std::move(http));
}

// ---------------------------------------------------------------------------
// shared prompt building

namespace detail {

inline std::string template_for(const RunConfig& cfg, Level level) {
    if (cfg.template_dir.empty()) return {};
    static const std::map<Level, std::string> kFiles = {{Level::L1, "level1.txt"},
                                                        {Level::L2, "level2.txt"},
                                                        {Level::L3, "level3.txt"},
                                                        {Level::FeatureGen, "featuregen.txt"}};
    std::filesystem::path p = std::filesystem::path(cfg.template_dir) / kFiles.at(level);
    if (!std::filesystem::exists(p)) return {};
    return read_file(p.string());
}

struct TrialContext {
    Schema presented_schema;
    std::vector<std::pair<Sample, std::string>> examples;
};

// Examples and corruption for one trial; every per-trial random draw is
// seeded by base_seed + index, so extending a run leaves earlier trials
// untouched.
inline TrialContext build_trial_context(const Dataset& pool, const GoldenProfile& profile,
                                        const RunConfig& cfg, uint64_t index) {
    SamplingPlan plan{cfg.sampling, cfg.shots, cfg.base_seed + index, cfg.class_balance};
    Corruption corruption{cfg.corruption, cfg.base_seed + index};
    auto examples = select_examples(pool, plan, profile);
    auto [schema_c, examples_c] = apply_corruption(pool.schema, examples, corruption);
    return {std::move(schema_c), std::move(examples_c)};
}

} // namespace detail

inline std::string build_diagnosis_prompt(const Dataset& pool, const GoldenProfile& profile,
                                          const RunConfig& cfg, Level level, uint64_t trial) {
    auto ctx = detail::build_trial_context(pool, profile, cfg, trial);
    PromptSpec spec;
    spec.level = level;
    spec.detail = cfg.description_detail;
    spec.schema = std::move(ctx.presented_schema);
    spec.examples = std::move(ctx.examples);
    spec.template_text = detail::template_for(cfg, level);
    return render_prompt(spec);
}

inline std::string build_generation_prompt(const Dataset& pool, const GoldenProfile& profile,
                                           const RunConfig& cfg, uint64_t set_index) {
    auto ctx = detail::build_trial_context(pool, profile, cfg, set_index);
    PromptSpec spec;
    spec.level = Level::FeatureGen;
    spec.detail = cfg.description_detail;
    spec.schema = std::move(ctx.presented_schema);
    spec.examples = std::move(ctx.examples);
    spec.max_conditions = max_conditions(static_cast<int>(pool.schema.variables.size()),
                                         static_cast<int>(profile.golden_vars.size()));
    spec.template_text = detail::template_for(cfg, Level::FeatureGen);
    return render_prompt(spec);
}

// ---------------------------------------------------------------------------
// commands

namespace detail {

inline void ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
    write_file(path, doc.dump(2) + "\n");
}

inline GoldenProfile load_or_compute_profile(const RunConfig& cfg, const Dataset* dataset) {
    std::string path = out_path(cfg, "golden.json");
    if (std::filesystem::exists(path))
        return profile_from_json(nlohmann::json::parse(read_file(path)));
    if (dataset == nullptr) throw ConfigError("no golden.json in " + cfg.out_dir + " and no dataset to compute it");
    return compute_golden_profile(*dataset);
}

inline nlohmann::ordered_json level_score_json(const LevelScore& score) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [var, s] : score.per_variable) per[var] = s;
    return {{"per_variable", std::move(per)}, {"overall", score.overall}};
}

inline std::vector<std::string> ruleset_files(const RunConfig& cfg) {
    std::vector<std::string> files;
    if (!std::filesystem::is_directory(cfg.out_dir)) return files;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.rfind("ruleset_", 0) == 0 && entry.path().extension() == ".rules")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace detail

// Computes the golden profile and writes golden.json; prints the ranked
// covariance table with the elbow threshold.
inline nlohmann::ordered_json cmd_golden(const RunConfig& cfg, std::ostream& log = std::cout) {
    validate_config(cfg);
    Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
    GoldenProfile profile = compute_golden_profile(dataset);
    detail::ensure_out_dir(cfg);
    auto doc = profile_to_json(profile);
    detail::write_json(detail::out_path(cfg, "golden.json"), doc);

    log << "rank  variable                      |cov|     golden\n";
    for (size_t i = 0; i < profile.ranked.size(); ++i) {
        const auto& r = profile.ranked[i];
        char line[128];
        std::snprintf(line, sizeof(line), "%-5zu %-28s %9.6f  %s\n", i + 1, r.var.c_str(), r.abs_cov,
                      profile.is_golden(r.var) ? "*" : "");
        log << line;
    }
    log << "gamma = " << format_sig6(profile.gamma) << "  (" << profile.golden_vars.size() << " golden of "
        << profile.ranked.size() << ")\n";
    for (const auto& w : profile.warnings) std::cerr << "warning: " << w << '\n';
    return doc;
}

// Runs the multi-level diagnosis sweep: per trial, sample + corrupt examples,
// render each level's prompt, complete, parse and score against the golden
// profile. Gateway and parse failures score 0 for that trial/level and are
// annotated; the sweep always completes.
inline nlohmann::ordered_json cmd_diagnose(const RunConfig& cfg, std::ostream& log = std::cout) {
    validate_config(cfg);
    if (cfg.levels.empty()) throw ConfigError("diagnose needs at least one level");
    for (Level level : cfg.levels)
        if (level == Level::FeatureGen) throw ConfigError("feature_gen is not a diagnosis level");
    Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
    GoldenProfile profile = compute_golden_profile(dataset);
    auto backend = make_backend(cfg);

    struct TrialOutcome {
        std::map<Level, LevelScore> scores;
        std::map<Level, std::string> errors;
    };
    std::vector<TrialOutcome> outcomes(static_cast<size_t>(cfg.trials));

    LevelScore zero;
    for (const auto& name : profile.golden_vars) zero.per_variable.emplace_back(name, 0.0);
    zero.overall = 0.0;

    parallel_for(static_cast<size_t>(cfg.trials), cfg.gateway.max_inflight, [&](size_t t) {
        auto& outcome = outcomes[t];
        for (Level level : cfg.levels) {
            try {
                std::string prompt = build_diagnosis_prompt(dataset, profile, cfg, level, t);
                CompletionRequest req{prompt, cfg.gateway.temperature, cfg.gateway.max_tokens,
                                      cfg.gateway.model_name,
                                      "diagnose-" + level_name(level) + "-t" + std::to_string(t)};
                std::string response = backend->complete(req);
                LevelScore score;
                switch (level) {
                    case Level::L1: score = rs1(parse_ranking(response, dataset.schema), profile); break;
                    case Level::L2: score = rs2(parse_relations(response, dataset.schema), profile); break;
                    case Level::L3: score = rs3(parse_values(response, dataset.schema), profile); break;
                    case Level::FeatureGen: break; // rejected above
                }
                outcome.scores.emplace(level, std::move(score));
            } catch (const std::exception& e) {
                // gateway / parse failures score 0 for this trial+level; the
                // sweep itself always completes
                LevelScore z = zero;
                z.level = level == Level::L1 ? 1 : level == Level::L2 ? 2 : 3;
                outcome.scores.emplace(level, std::move(z));
                outcome.errors.emplace(level, e.what());
            }
        }
    });

    nlohmann::ordered_json report;
    report["dataset"] = cfg.dataset_path;
    report["trials"] = nlohmann::ordered_json::array();
    for (int t = 0; t < cfg.trials; ++t) {
        nlohmann::ordered_json entry;
        entry["trial"] = t;
        entry["seed"] = cfg.base_seed + static_cast<uint64_t>(t);
        entry["level_scores"] = nlohmann::ordered_json::object();
        for (Level level : cfg.levels)
            entry["level_scores"][level_name(level)] =
                detail::level_score_json(outcomes[static_cast<size_t>(t)].scores.at(level));
        if (!outcomes[static_cast<size_t>(t)].errors.empty()) {
            entry["errors"] = nlohmann::ordered_json::object();
            for (const auto& [level, msg] : outcomes[static_cast<size_t>(t)].errors)
                entry["errors"][level_name(level)] = msg;
        }
        report["trials"].push_back(std::move(entry));
    }

    report["level_scores"] = nlohmann::ordered_json::object();
    report["aggregates"] = nlohmann::ordered_json::object();
    for (Level level : cfg.levels) {
        // across-trial mean per golden variable, plus bias / variance proxy
        nlohmann::ordered_json per = nlohmann::ordered_json::object();
        for (size_t g = 0; g < profile.golden_vars.size(); ++g) {
            double sum = 0.0;
            for (const auto& outcome : outcomes) sum += outcome.scores.at(level).per_variable[g].second;
            per[profile.golden_vars[g]] = sum / static_cast<double>(cfg.trials);
        }
        std::vector<double> overalls;
        for (const auto& outcome : outcomes) overalls.push_back(outcome.scores.at(level).overall);
        auto agg = aggregate_trials(overalls);
        report["level_scores"][level_name(level)] = {{"per_variable", std::move(per)}, {"overall", agg.bias}};
        report["aggregates"][level_name(level)] = {{"bias", agg.bias}, {"sd", agg.variance_proxy}};
    }

    detail::ensure_out_dir(cfg);
    detail::write_json(detail::out_path(cfg, "report.json"), report);

    log << "level  bias      sd\n";
    for (Level level : cfg.levels) {
        char line[64];
        std::snprintf(line, sizeof(line), "%-6s %.6f  %.6f\n", level_name(level).c_str(),
                      report["aggregates"][level_name(level)]["bias"].get<double>(),
                      report["aggregates"][level_name(level)]["sd"].get<double>());
        log << line;
    }
    return report;
}

// Issues n_feature_sets feature-generation prompts over the few-shot train
// pool (distinct seeds give distinct example draws) and writes one .rules
// file per set. A failed parse is retried once, then recorded as empty.
inline nlohmann::ordered_json cmd_generate(const RunConfig& cfg, std::ostream& log = std::cout) {
    validate_config(cfg);
    if (cfg.shots < 2) throw ConfigError("generate needs shots >= 2 to form a train pool");
    Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
    GoldenProfile profile = compute_golden_profile(dataset);
    auto [train, test] = split(dataset, cfg.base_seed, static_cast<size_t>(cfg.shots));
    auto backend = make_backend(cfg);

    struct SetOutcome {
        std::string text; // canonical printed form; empty on failure
        std::string error;
    };
    std::vector<SetOutcome> sets(static_cast<size_t>(cfg.n_feature_sets));

    parallel_for(static_cast<size_t>(cfg.n_feature_sets), cfg.gateway.max_inflight, [&](size_t i) {
        CompletionRequest req{{}, cfg.gateway.temperature, cfg.gateway.max_tokens, cfg.gateway.model_name,
                              "generate-s" + std::to_string(i)};
        std::string last_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                req.prompt = build_generation_prompt(train, profile, cfg, i);
                std::string response = backend->complete(req);
                RuleSet rules = parse_rule_set(response, dataset.schema,
                                               max_conditions(static_cast<int>(dataset.schema.variables.size()),
                                                              static_cast<int>(profile.golden_vars.size())));
                sets[i].text = print_rule_set(rules);
                return;
            } catch (const std::exception& e) {
                last_error = e.what();
            }
        }
        sets[i].error = last_error;
    });

    detail::ensure_out_dir(cfg);
    nlohmann::ordered_json manifest;
    manifest["sets"] = nlohmann::ordered_json::array();
    int ok_count = 0;
    for (int i = 0; i < cfg.n_feature_sets; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "ruleset_%02d.rules", i);
        detail::write_file(detail::out_path(cfg, name), sets[static_cast<size_t>(i)].text);
        nlohmann::ordered_json entry{{"file", name}, {"ok", sets[static_cast<size_t>(i)].error.empty()}};
        if (!sets[static_cast<size_t>(i)].error.empty()) entry["error"] = sets[static_cast<size_t>(i)].error;
        else ++ok_count;
        manifest["sets"].push_back(std::move(entry));
    }
    detail::write_json(detail::out_path(cfg, "generate.json"), manifest);
    log << ok_count << " of " << cfg.n_feature_sets << " feature sets generated\n";
    if (ok_count == 0) throw AllGenerationsFailed("every feature-set generation failed to parse");
    return manifest;
}

// Scores every generated rule set against the golden profile (FS1-FS3 and
// their mean) and applies the configured top-k / drop-k selection.
inline nlohmann::ordered_json cmd_evaluate(const RunConfig& cfg, std::ostream& log = std::cout) {
    validate_config(cfg);
    auto files = detail::ruleset_files(cfg);
    if (files.empty()) throw NoRuleFiles("no ruleset_*.rules files in " + cfg.out_dir);

    Schema schema = load_schema(cfg.schema_path);
    GoldenProfile profile;
    if (std::filesystem::exists(detail::out_path(cfg, "golden.json"))) {
        profile = profile_from_json(nlohmann::json::parse(detail::read_file(detail::out_path(cfg, "golden.json"))));
    } else {
        Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
        profile = compute_golden_profile(dataset);
    }

    std::vector<FeatureSetScore> scores;
    nlohmann::ordered_json doc;
    doc["feature_sets"] = nlohmann::ordered_json::array();
    for (const auto& file : files) {
        std::string text = detail::read_file(file);
        FeatureSetScore s;
        bool empty = trim(text).empty();
        if (!empty) {
            try {
                // no re-truncation when scoring files already on disk
                RuleSet rules = parse_rule_set(text, schema, std::numeric_limits<int>::max());
                s = feature_set_score(rules, profile, schema.target.positive_label);
            } catch (const NoRulesFound&) {
                empty = true;
            }
        }
        scores.push_back(s);
        doc["feature_sets"].push_back({{"file", std::filesystem::path(file).filename().string()},
                                       {"fs1", s.fs1},
                                       {"fs2", s.fs2},
                                       {"fs3", s.fs3},
                                       {"mean", s.mean},
                                       {"empty", empty}});
    }

    auto indices = select_feature_sets(scores, cfg.selection.mode, cfg.selection.k);
    doc["selection"] = {{"mode", selection_mode_name(cfg.selection.mode)},
                        {"k", cfg.selection.k},
                        {"indices", indices}};
    detail::write_json(detail::out_path(cfg, "scores.json"), doc);

    log << "set                fs1       fs2       fs3       mean\n";
    for (size_t i = 0; i < scores.size(); ++i) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-18s %.6f  %.6f  %.6f  %.6f%s\n",
                      doc["feature_sets"][i]["file"].get<std::string>().c_str(), scores[i].fs1, scores[i].fs2,
                      scores[i].fs3, scores[i].mean,
                      std::find(indices.begin(), indices.end(), static_cast<int>(i)) != indices.end() ? "  *"
                                                                                                      : "");
        log << line;
    }
    return doc;
}

// Trains one model per rule set on the few-shot train split and reports test
// AUROC for the all-sets ensemble and for the selected subset, so the
// selection delta is directly visible.
inline nlohmann::ordered_json cmd_predict(const RunConfig& cfg, std::ostream& log = std::cout) {
    validate_config(cfg);
    if (cfg.shots < 2) throw ConfigError("predict needs shots >= 2 to form a train split");
    auto files = detail::ruleset_files(cfg);
    if (files.empty()) throw NoRuleFiles("no ruleset_*.rules files in " + cfg.out_dir);
    std::string scores_path = detail::out_path(cfg, "scores.json");
    if (!std::filesystem::exists(scores_path))
        throw ConfigError("no scores.json in " + cfg.out_dir + "; run evaluate first");
    auto scores_doc = nlohmann::json::parse(detail::read_file(scores_path));
    std::vector<int> selection = scores_doc.at("selection").at("indices").get<std::vector<int>>();

    Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
    auto [train, test] = split(dataset, cfg.base_seed, static_cast<size_t>(cfg.shots));

    struct Member {
        int index;
        std::string file;
        LinearModel model;
        BinaryFeatureMatrix train_matrix;
        BinaryFeatureMatrix test_matrix;
    };
    std::vector<Member> members;
    for (size_t i = 0; i < files.size(); ++i) {
        std::string text = detail::read_file(files[i]);
        if (trim(text).empty()) continue; // flagged-empty set: nothing to featurize
        RuleSet rules;
        try {
            rules = parse_rule_set(text, dataset.schema, std::numeric_limits<int>::max());
        } catch (const NoRulesFound&) {
            continue;
        }
        Member m;
        m.index = static_cast<int>(i);
        m.file = std::filesystem::path(files[i]).filename().string();
        m.train_matrix = featurize(rules, train);
        m.test_matrix = featurize(rules, test);
        m.model = train_logreg(m.train_matrix, train.y, cfg.base_seed + i);
        members.push_back(std::move(m));
    }
    if (members.empty()) throw EmptyEnsemble("no usable rule sets");

    auto ensemble_auroc = [&](const std::vector<const Member*>& subset) {
        std::vector<LinearModel> models;
        std::vector<BinaryFeatureMatrix> mats;
        for (const auto* m : subset) {
            models.push_back(m->model);
            mats.push_back(m->test_matrix);
        }
        return auroc(ensemble_predict(models, mats), test.y);
    };

    std::vector<const Member*> all;
    for (const auto& m : members) all.push_back(&m);
    std::vector<const Member*> picked;
    for (const auto& m : members)
        if (std::find(selection.begin(), selection.end(), m.index) != selection.end()) picked.push_back(&m);
    if (picked.empty()) throw EmptyEnsemble("selection contains no usable rule sets");

    double auroc_all = ensemble_auroc(all);
    double auroc_selected = ensemble_auroc(picked);

    nlohmann::ordered_json doc;
    doc["n_train"] = train.rows.size();
    doc["n_test"] = test.rows.size();
    doc["sets_usable"] = members.size();
    doc["selection_indices"] = selection;
    doc["auroc_all_sets"] = auroc_all;
    doc["auroc_selected"] = auroc_selected;
    detail::ensure_out_dir(cfg);
    detail::write_json(detail::out_path(cfg, "predict.json"), doc);

    nlohmann::ordered_json models_doc = nlohmann::ordered_json::array();
    for (const auto& m : members) {
        auto entry = model_to_json(m.model, m.train_matrix);
        entry["file"] = m.file;
        models_doc.push_back(std::move(entry));
    }
    detail::write_json(detail::out_path(cfg, "models.json"), models_doc);

    char line[128];
    std::snprintf(line, sizeof(line), "test AUROC  all sets: %.6f   selected: %.6f\n", auroc_all,
                  auroc_selected);
    log << line;
    return doc;
}

} // namespace featdiag
