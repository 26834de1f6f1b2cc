// Generates a self-contained offline demo directory: a synthetic screening
// dataset, its schema, a replay transcript store answering every prompt the
// demo config produces, and the config itself. Everything is deterministic,
// so the output can be committed and replayed byte-for-byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "featdiag/featdiag.hpp"

using namespace featdiag;

namespace {

constexpr uint64_t kDataSeed = 7;
constexpr const char* kTimestamp = "2026-01-01T00:00:00Z";

Dataset make_demo_dataset(const std::filesystem::path& dir) {
    nlohmann::ordered_json schema_doc = {
        {"task_description",
         "Predict whether a patient screens positive for diabetes from routine check-up measurements."},
        {"target", {{"name", "outcome"}, {"positive_label", "diabetic"}}},
        {"variables",
         {{{"name", "glucose"}, {"kind", "numeric"}, {"description", "plasma glucose concentration (mg/dL)"}},
          {{"name", "age"}, {"kind", "numeric"}, {"description", "age in years"}},
          {{"name", "bmi"}, {"kind", "numeric"}, {"description", "body mass index"}},
          {{"name", "smoker"},
           {"kind", "categorical"},
           {"description", "current smoking status"},
           {"categories", {"no", "yes"}}}}}};
    detail::write_file((dir / "schema.json").string(), schema_doc.dump(2) + "\n");

    std::string csv = "glucose,age,bmi,outcome,smoker\n";
    Rng rng(kDataSeed);
    for (int i = 0; i < 48; ++i) {
        int glucose = 80 + static_cast<int>(rng.bounded(121));
        int age = 20 + static_cast<int>(rng.bounded(61));
        int bmi = 18 + static_cast<int>(rng.bounded(23));
        bool diabetic = glucose + (age - 50) / 4 >= 126;
        bool smoker = rng.bounded(100) < (diabetic ? 60u : 25u);
        csv += std::to_string(glucose) + "," + std::to_string(age) + "," + std::to_string(bmi) + "," +
               (diabetic ? "diabetic" : "healthy") + "," + (smoker ? "yes" : "no") + "\n";
    }
    detail::write_file((dir / "dataset.csv").string(), csv);
    return load_dataset((dir / "dataset.csv").string(), (dir / "schema.json").string());
}

RunConfig make_demo_config(const std::filesystem::path& dir) {
    nlohmann::ordered_json cfg_doc = {{"dataset", "dataset.csv"},
                                      {"schema", "schema.json"},
                                      {"backend", "replay"},
                                      {"gateway",
                                       {{"model_name", "demo-llm"},
                                        {"temperature", 0.5},
                                        {"max_tokens", 1024},
                                        {"replay_path", "transcripts.jsonl"}}},
                                      {"levels", {"L1", "L2", "L3"}},
                                      {"trials", 2},
                                      {"shots", 8},
                                      {"sampling", "random"},
                                      {"corruption", "none"},
                                      {"description_detail", "full"},
                                      {"n_feature_sets", 4},
                                      {"selection", {{"mode", "topk"}, {"k", 2}}},
                                      {"base_seed", 11},
                                      {"out_dir", "out"}};
    detail::write_file((dir / "config.json").string(), cfg_doc.dump(2) + "\n");
    return load_config((dir / "config.json").string());
}

std::string craft_l1(const GoldenProfile& profile, int trial) {
    if (trial == 0) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : profile.ranked) arr.push_back(r.var);
        return "Here is my ranking.\n```json\n" + nlohmann::ordered_json{{"ranking", arr}}.dump() + "\n```\n";
    }
    // plain numbered list, top two swapped, with one hallucinated variable
    std::vector<std::string> order;
    for (const auto& r : profile.ranked) order.push_back(r.var);
    if (order.size() >= 2) std::swap(order[0], order[1]);
    std::string out = "Ranked by importance:\n";
    int rank = 1;
    for (const auto& name : order) out += std::to_string(rank++) + ". " + name + "\n";
    out += std::to_string(rank) + ". cholesterol\n";
    return out;
}

std::string craft_l2(const Dataset& ds, const GoldenProfile& profile, int trial) {
    if (trial == 0) {
        nlohmann::ordered_json rel = nlohmann::ordered_json::object();
        for (const auto& var : ds.schema.variables) {
            auto it = profile.relations.find(var.name);
            rel[var.name] = it == profile.relations.end() ? "neutral" : relation_name(it->second);
        }
        return "```json\n" + nlohmann::ordered_json{{"relations", rel}}.dump() + "\n```\n";
    }
    std::string out = "My analysis per variable:\n";
    bool flipped = false;
    for (const auto& var : ds.schema.variables) {
        auto it = profile.relations.find(var.name);
        if (it == profile.relations.end()) {
            out += var.name + ": neutral\n";
        } else if (!flipped) {
            out += var.name + ": " + relation_name(flip(it->second)) + " correlation\n";
            flipped = true;
        } else {
            out += var.name + ": " + relation_name(it->second) + " correlation\n";
        }
    }
    return out;
}

std::string craft_l3(const GoldenProfile& profile, int trial) {
    if (trial == 0) {
        nlohmann::ordered_json vals = nlohmann::ordered_json::object();
        for (const auto& name : profile.golden_vars) {
            const auto& gv = profile.values.at(name);
            if (gv.numeric) vals[name] = gv.threshold;
            else vals[name] = gv.category;
        }
        return "```json\n" + nlohmann::ordered_json{{"values", vals}}.dump() + "\n```\n";
    }
    std::string out = "Suggested boundaries:\n";
    bool vague = true;
    for (const auto& name : profile.golden_vars) {
        const auto& gv = profile.values.at(name);
        if (gv.numeric) {
            if (vague) {
                out += name + " should be high\n"; // unparseable on purpose
                vague = false;
            } else {
                auto range = profile.ranges.at(name);
                double off = gv.threshold + 0.1 * (range.second - range.first);
                out += name + " >= " + format_sig6(off) + "\n";
            }
        } else {
            out += name + ": " + gv.category + "\n";
        }
    }
    return out;
}

// Builds the rule line for one class from the golden profile. `invert` flips
// every direction (the deliberately bad generation).
std::string rule_line(const Dataset& ds, const GoldenProfile& profile, bool positive_class, bool invert,
                      double threshold_shift) {
    std::string conds;
    for (const auto& name : profile.golden_vars) {
        const auto& gv = profile.values.at(name);
        if (!conds.empty()) conds += " AND ";
        if (gv.numeric) {
            auto range = profile.ranges.at(name);
            double t = gv.threshold + threshold_shift * (range.second - range.first);
            bool ge = profile.relations.at(name) == Relation::Positive;
            if (!positive_class) ge = !ge;
            if (invert) ge = !ge;
            conds += name + (ge ? " >= " : " <= ") + format_sig6(t);
        } else {
            bool eq = positive_class != invert;
            conds += name + (eq ? " == " : " != ") + gv.category;
        }
    }
    const std::string label = positive_class ? ds.schema.target.positive_label : "healthy";
    return label + ": " + conds + "\n";
}

std::string craft_rules(const Dataset& ds, const GoldenProfile& profile, int set_index) {
    switch (set_index) {
        case 0: // faithful to the golden profile
            return rule_line(ds, profile, true, false, 0.0) + rule_line(ds, profile, false, false, 0.0);
        case 1: // right directions, shifted thresholds
            return rule_line(ds, profile, true, false, 0.15) + rule_line(ds, profile, false, false, 0.15);
        case 2: { // drops golden variables in favour of a noise one
            std::string noise;
            for (const auto& var : ds.schema.variables)
                if (!profile.is_golden(var.name) && var.kind == VarKind::Numeric) {
                    noise = var.name;
                    break;
                }
            if (noise.empty()) return craft_rules(ds, profile, 1);
            return ds.schema.target.positive_label + ": " + noise + " >= 25\nhealthy: " + noise + " < 25\n";
        }
        default: // inverted directions
            return rule_line(ds, profile, true, true, 0.0) + rule_line(ds, profile, false, true, 0.0);
    }
}

} // namespace

int main(int argc, char** argv) {
    std::filesystem::path dir = argc > 1 ? argv[1] : "demo";
    std::filesystem::create_directories(dir);

    Dataset dataset = make_demo_dataset(dir);
    RunConfig cfg = make_demo_config(dir);
    GoldenProfile profile = compute_golden_profile(dataset);

    std::ofstream transcripts(dir / "transcripts.jsonl", std::ios::binary);
    auto record = [&](const std::string& trial_id, const std::string& prompt, const std::string& response) {
        CompletionRequest req{prompt, cfg.gateway.temperature, cfg.gateway.max_tokens, cfg.gateway.model_name,
                              trial_id};
        Transcript t{trial_id, prompt_hash(req), prompt, response, req.model_name,
                     req.temperature, req.max_tokens, kTimestamp};
        transcripts << t.to_json().dump() << '\n';
    };

    for (int t = 0; t < cfg.trials; ++t) {
        record("diagnose-L1-t" + std::to_string(t),
               build_diagnosis_prompt(dataset, profile, cfg, Level::L1, static_cast<uint64_t>(t)),
               craft_l1(profile, t));
        record("diagnose-L2-t" + std::to_string(t),
               build_diagnosis_prompt(dataset, profile, cfg, Level::L2, static_cast<uint64_t>(t)),
               craft_l2(dataset, profile, t));
        record("diagnose-L3-t" + std::to_string(t),
               build_diagnosis_prompt(dataset, profile, cfg, Level::L3, static_cast<uint64_t>(t)),
               craft_l3(profile, t));
    }

    auto [train, test] = split(dataset, cfg.base_seed, static_cast<size_t>(cfg.shots));
    for (int i = 0; i < cfg.n_feature_sets; ++i)
        record("generate-s" + std::to_string(i),
               build_generation_prompt(train, profile, cfg, static_cast<uint64_t>(i)),
               craft_rules(dataset, profile, i));

    std::cout << "demo written to " << dir.string() << " (" << profile.golden_vars.size()
              << " golden variables)\n";
    return 0;
}
