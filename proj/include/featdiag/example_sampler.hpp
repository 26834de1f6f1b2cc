#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"
#include "featdiag/golden_stats.hpp"

namespace featdiag {

enum class SamplingStrategy { Random, Best, Worst };

struct SamplingPlan {
    SamplingStrategy strategy = SamplingStrategy::Random;
    int shots = 0; // 0 = zero-shot
    uint64_t seed = 0;
    bool class_balance = false; // shots must be even when set
};

enum class CorruptionKind { None, ShuffleVariableNames, MaskDescriptions, MixValues, ReorderVariables };

struct Corruption {
    CorruptionKind kind = CorruptionKind::None;
    uint64_t seed = 0;
};

inline std::string strategy_name(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Random: return "random";
        case SamplingStrategy::Best: return "best";
        case SamplingStrategy::Worst: return "worst";
    }
    return "random";
}

inline std::string corruption_name(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::None: return "none";
        case CorruptionKind::ShuffleVariableNames: return "shuffle_names";
        case CorruptionKind::MaskDescriptions: return "mask_descriptions";
        case CorruptionKind::MixValues: return "mix_values";
        case CorruptionKind::ReorderVariables: return "reorder_variables";
    }
    return "none";
}

// ---------------------------------------------------------------------------
// sample distance

namespace detail {

// Distance between a normalized sample value n and normalized golden value g.
// The side inconsistent with the relation carries an additive penalty equal
// to the width of the consistent side, so every inconsistent sample is
// farther than every consistent one within that width.
inline double directed_distance(double n, double g, Relation rel) {
    if (rel == Relation::Positive) {
        double d = std::fabs(n - g);
        return n > g ? d : d + std::fabs(1.0 - g);
    }
    double d = std::fabs(n - g);
    return n < g ? d : d + g;
}

} // namespace detail

// Positive-class distance of a sample's value on a golden numeric variable.
// Negative-class callers flip the relation first (see select_examples).
inline double sample_distance(const Sample& sample, const Schema& schema, const std::string& feature,
                              const GoldenProfile& profile) {
    int ji = schema.index_of(feature);
    if (ji < 0) throw NotGoldenNumeric("unknown variable: " + feature);
    if (!profile.is_golden(feature)) throw NotGoldenNumeric("'" + feature + "' is not a golden variable");
    auto value_it = profile.values.find(feature);
    auto range_it = profile.ranges.find(feature);
    if (value_it == profile.values.end() || !value_it->second.numeric || range_it == profile.ranges.end())
        throw NotGoldenNumeric("'" + feature + "' is not a numeric golden variable with a range");

    const auto [lo, hi] = range_it->second;
    const double g = normalize(value_it->second.threshold, lo, hi);
    const Relation rel = profile.relations.at(feature);
    const Value& v = sample.values[static_cast<size_t>(ji)];
    if (!v.is_number()) return 1.0 + (rel == Relation::Positive ? std::fabs(1.0 - g) : g); // missing: worst case
    return detail::directed_distance(normalize(v.num, lo, hi), g, rel);
}

// ---------------------------------------------------------------------------
// example selection

namespace detail {

// Mean class-consistent distance over golden variables. Negative-class
// samples flip the relation (a good negative example sits on the opposite
// side of the golden value). Categorical golden variables contribute 0/1 by
// golden-category membership, inverted for the negative class.
inline double mean_golden_distance(const Dataset& pool, size_t row, const GoldenProfile& profile) {
    const bool positive = pool.y[row] == 1;
    double sum = 0.0;
    size_t count = 0;
    for (const auto& name : profile.golden_vars) {
        const auto& gv = profile.values.at(name);
        int ji = pool.schema.index_of(name);
        if (ji < 0) continue;
        const Value& v = pool.rows[row].values[static_cast<size_t>(ji)];
        if (gv.numeric) {
            auto range_it = profile.ranges.find(name);
            if (range_it == profile.ranges.end()) continue;
            const auto [lo, hi] = range_it->second;
            const double g = normalize(gv.threshold, lo, hi);
            Relation rel = profile.relations.at(name);
            if (!positive) rel = flip(rel);
            if (v.is_number()) sum += directed_distance(normalize(v.num, lo, hi), g, rel);
            else sum += 1.0 + (rel == Relation::Positive ? std::fabs(1.0 - g) : g);
        } else {
            bool holds = v.is_category() && v.cat == gv.category;
            sum += positive ? (holds ? 0.0 : 1.0) : (holds ? 1.0 : 0.0);
        }
        ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

inline std::vector<size_t> pick_ranked(const std::vector<std::pair<double, size_t>>& scored, size_t take,
                                       bool worst) {
    std::vector<std::pair<double, size_t>> order = scored;
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return worst ? a.first > b.first : a.first < b.first;
        return a.second < b.second; // ties by row index
    });
    std::vector<size_t> out;
    out.reserve(take);
    for (size_t i = 0; i < take && i < order.size(); ++i) out.push_back(order[i].second);
    return out;
}

} // namespace detail

// Selects plan.shots examples from the pool. Random draws uniformly without
// replacement; Best/Worst rank rows by mean class-consistent golden distance.
// With class_balance, each class contributes shots/2 picks, interleaved
// positive-first.
inline std::vector<std::pair<Sample, std::string>> select_examples(const Dataset& pool, const SamplingPlan& plan,
                                                                   const GoldenProfile& profile) {
    std::vector<std::pair<Sample, std::string>> out;
    if (plan.shots <= 0) return out;
    const size_t shots = static_cast<size_t>(plan.shots);
    if (plan.class_balance && plan.shots % 2 != 0)
        throw ConfigError("class-balanced sampling needs an even shot count");
    if (pool.rows.size() < shots)
        throw PoolTooSmall("pool has " + std::to_string(pool.rows.size()) + " rows, need " + std::to_string(shots));

    auto indices_of_class = [&](int cls) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < pool.rows.size(); ++i)
            if (pool.y[i] == cls) idx.push_back(i);
        return idx;
    };

    std::vector<size_t> picked;
    if (plan.class_balance) {
        const size_t per_class = shots / 2;
        std::vector<size_t> pos = indices_of_class(1), neg = indices_of_class(0);
        if (pos.size() < per_class || neg.size() < per_class)
            throw PoolTooSmall("pool lacks " + std::to_string(per_class) + " rows of each class");
        auto pick_class = [&](std::vector<size_t>& idx, uint64_t salt) {
            if (plan.strategy == SamplingStrategy::Random) {
                Rng rng(plan.seed ^ salt);
                rng.shuffle(idx);
                return std::vector<size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class));
            }
            std::vector<std::pair<double, size_t>> scored;
            scored.reserve(idx.size());
            for (size_t i : idx) scored.emplace_back(detail::mean_golden_distance(pool, i, profile), i);
            return detail::pick_ranked(scored, per_class, plan.strategy == SamplingStrategy::Worst);
        };
        auto p = pick_class(pos, 0x9e3779b97f4a7c15ULL);
        auto q = pick_class(neg, 0xc2b2ae3d27d4eb4fULL);
        for (size_t i = 0; i < per_class; ++i) {
            picked.push_back(p[i]);
            picked.push_back(q[i]);
        }
    } else if (plan.strategy == SamplingStrategy::Random) {
        Rng rng(plan.seed);
        std::vector<size_t> order = rng.permutation(pool.rows.size());
        picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(shots));
    } else {
        std::vector<std::pair<double, size_t>> scored;
        scored.reserve(pool.rows.size());
        for (size_t i = 0; i < pool.rows.size(); ++i)
            scored.emplace_back(detail::mean_golden_distance(pool, i, profile), i);
        picked = detail::pick_ranked(scored, shots, plan.strategy == SamplingStrategy::Worst);
    }

    out.reserve(picked.size());
    for (size_t i : picked) out.emplace_back(pool.rows[i], pool.labels[i]);
    return out;
}

// ---------------------------------------------------------------------------
// corruption

// Applies a presentation corruption to (schema, examples). Scoring always
// keeps the original schema; corrupted copies are only ever rendered into
// prompts.
inline std::pair<Schema, std::vector<std::pair<Sample, std::string>>> apply_corruption(
    const Schema& schema, const std::vector<std::pair<Sample, std::string>>& examples,
    const Corruption& corruption) {
    Schema out_schema = schema;
    auto out_examples = examples;
    switch (corruption.kind) {
        case CorruptionKind::None: break;
        case CorruptionKind::ShuffleVariableNames: {
            // names and descriptions move together; kinds and values stay put
            Rng rng(corruption.seed);
            auto perm = rng.permutation(schema.variables.size());
            for (size_t i = 0; i < perm.size(); ++i) {
                out_schema.variables[i].name = schema.variables[perm[i]].name;
                out_schema.variables[i].description = schema.variables[perm[i]].description;
            }
            break;
        }
        case CorruptionKind::MaskDescriptions:
            for (auto& var : out_schema.variables) var.description.clear();
            break;
        case CorruptionKind::MixValues: {
            // per example, swap the values of two randomly chosen numeric variables
            Rng rng(corruption.seed);
            std::vector<size_t> numeric;
            for (size_t j = 0; j < schema.variables.size(); ++j)
                if (schema.variables[j].kind == VarKind::Numeric) numeric.push_back(j);
            if (numeric.size() >= 2) {
                for (auto& [sample, label] : out_examples) {
                    size_t a = rng.bounded(numeric.size());
                    size_t b = rng.bounded(numeric.size() - 1);
                    if (b >= a) ++b;
                    std::swap(sample.values[numeric[a]], sample.values[numeric[b]]);
                }
            }
            break;
        }
        case CorruptionKind::ReorderVariables: {
            Rng rng(corruption.seed);
            auto perm = rng.permutation(schema.variables.size());
            for (size_t i = 0; i < perm.size(); ++i) out_schema.variables[i] = schema.variables[perm[i]];
            for (auto& [sample, label] : out_examples) {
                std::vector<Value> reordered(sample.values.size());
                for (size_t i = 0; i < perm.size(); ++i) reordered[i] = sample.values[perm[i]];
                sample.values = std::move(reordered);
            }
            break;
        }
    }
    return {std::move(out_schema), std::move(out_examples)};
}

} // namespace featdiag
