#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "featdiag/errors.hpp"
#include "featdiag/golden_stats.hpp"
#include "featdiag/response_parser.hpp"

namespace featdiag {

// Per-level score of one response: one value per golden variable plus their
// arithmetic mean. Missing or unparsed answers score 0 rather than being
// excluded, so omitting hard variables can never raise a score.
struct LevelScore {
    int level = 1;
    std::vector<std::pair<std::string, double>> per_variable; // golden order
    double overall = 0.0;
};

struct TrialAggregate {
    double bias = 0.0;           // mean overall score across trials
    double variance_proxy = 0.0; // population standard deviation
};

struct FeatureSetScore {
    double fs1 = 0.0;
    double fs2 = 0.0;
    double fs3 = 0.0;
    double mean = 0.0;
};

enum class SelectionMode { TopK, DropK };

// ---------------------------------------------------------------------------
// level 1

// S_rank: 1 for the top rank, decreasing linearly; rank n_vars+1 encodes a
// variable missing from the ranking and scores 0.
inline double rank_score(int rank, int n_vars) {
    return 1.0 - static_cast<double>(rank - 1) / static_cast<double>(n_vars);
}

inline LevelScore rs1(const Ranking& ranking, const GoldenProfile& profile) {
    LevelScore score;
    score.level = 1;
    const int n_vars = profile.n_vars();
    double sum = 0.0;
    for (const auto& name : profile.golden_vars) {
        auto it = std::find(ranking.vars.begin(), ranking.vars.end(), name);
        int rank = it == ranking.vars.end() ? n_vars + 1
                                            : static_cast<int>(it - ranking.vars.begin()) + 1;
        double s = rank_score(rank, n_vars);
        score.per_variable.emplace_back(name, s);
        sum += s;
    }
    score.overall = profile.golden_vars.empty() ? 0.0 : sum / static_cast<double>(profile.golden_vars.size());
    return score;
}

// ---------------------------------------------------------------------------
// level 2

// Exact-match correctness; Neutral and Unparsed both count as incorrect.
inline int correctness_score(RelationToken answer, Relation golden) {
    if (answer == RelationToken::Positive && golden == Relation::Positive) return 1;
    if (answer == RelationToken::Negative && golden == Relation::Negative) return 1;
    return 0;
}

inline LevelScore rs2(const RelationAnswer& relations, const GoldenProfile& profile) {
    LevelScore score;
    score.level = 2;
    double sum = 0.0;
    for (const auto& name : profile.golden_vars) {
        auto it = relations.relations.find(name);
        RelationToken tok = it == relations.relations.end() ? RelationToken::Unparsed : it->second;
        double s = correctness_score(tok, profile.relations.at(name));
        score.per_variable.emplace_back(name, s);
        sum += s;
    }
    score.overall = profile.golden_vars.empty() ? 0.0 : sum / static_cast<double>(profile.golden_vars.size());
    return score;
}

// ---------------------------------------------------------------------------
// level 3

// Numeric answers are clamped into the variable range and scored by
// 1 - |N(answer) - N(golden)|; categorical answers score 1 on the golden
// category and 0.5 on any other; unparsed answers score 0.
inline double normalized_value_score(const ParsedValue& answer, const GoldenValue& golden,
                                     std::pair<double, double> range) {
    if (golden.numeric) {
        if (!answer.is_number()) return 0.0;
        double n_llm = normalize(answer.num, range.first, range.second);
        double n_gold = normalize(golden.threshold, range.first, range.second);
        return 1.0 - std::fabs(n_llm - n_gold);
    }
    if (!answer.is_category()) return 0.0;
    return answer.cat == golden.category ? 1.0 : 0.5;
}

inline LevelScore rs3(const ValueAnswer& values, const GoldenProfile& profile) {
    LevelScore score;
    score.level = 3;
    double sum = 0.0;
    for (const auto& name : profile.golden_vars) {
        const auto& golden = profile.values.at(name);
        auto range_it = profile.ranges.find(name);
        std::pair<double, double> range =
            range_it == profile.ranges.end() ? std::make_pair(0.0, 0.0) : range_it->second;
        auto it = values.values.find(name);
        ParsedValue answer = it == values.values.end() ? ParsedValue::unparsed() : it->second;
        double s = normalized_value_score(answer, golden, range);
        score.per_variable.emplace_back(name, s);
        sum += s;
    }
    score.overall = profile.golden_vars.empty() ? 0.0 : sum / static_cast<double>(profile.golden_vars.size());
    return score;
}

// ---------------------------------------------------------------------------
// feature scores

// F1 of the variables mentioned by the rule set against the golden set.
inline double fs1(const RuleSet& rule_set, const GoldenProfile& profile) {
    std::set<std::string> mentioned = rule_set.variables();
    if (mentioned.empty() || profile.golden_vars.empty()) return 0.0;
    size_t hit = 0;
    for (const auto& name : profile.golden_vars)
        if (mentioned.count(name)) ++hit;
    double precision = static_cast<double>(hit) / static_cast<double>(mentioned.size());
    double recall = static_cast<double>(hit) / static_cast<double>(profile.golden_vars.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

namespace detail {

// Relation implied by one condition, given the class it predicts. Inequality
// direction flips under the negative class; equality and membership on the
// golden category inherit that category's covariance sign (the profile
// relation), likewise inverted under the negative class.
inline std::optional<Relation> inferred_relation(const Condition& cond, bool positive_class,
                                                 const GoldenValue& golden, Relation golden_relation) {
    switch (cond.op) {
        case CondOp::Gt:
        case CondOp::Ge:
            return positive_class ? Relation::Positive : Relation::Negative;
        case CondOp::Lt:
        case CondOp::Le:
            return positive_class ? Relation::Negative : Relation::Positive;
        case CondOp::Eq:
        case CondOp::Ne:
        case CondOp::In: {
            if (golden.numeric || cond.numeric) return std::nullopt;
            bool on_golden = std::find(cond.categories.begin(), cond.categories.end(), golden.category) !=
                             cond.categories.end();
            if (!on_golden) return std::nullopt;
            Relation base = golden_relation;
            if (cond.op == CondOp::Ne) base = flip(base);
            return positive_class ? base : flip(base);
        }
    }
    return std::nullopt;
}

} // namespace detail

// Mean directional correctness over golden variables. A variable scores 1
// only when every condition mentioning it implies the golden relation;
// contradictions and absence both score 0.
inline double fs2(const RuleSet& rule_set, const GoldenProfile& profile, const std::string& positive_label) {
    if (profile.golden_vars.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& name : profile.golden_vars) {
        const Relation golden_rel = profile.relations.at(name);
        const GoldenValue& golden = profile.values.at(name);
        std::set<Relation> inferred;
        for (const auto& cls : rule_set.classes) {
            const bool positive_class = cls.label == positive_label;
            for (const auto& rule : cls.rules)
                for (const auto& cond : rule) {
                    if (cond.var != name) continue;
                    if (auto rel = detail::inferred_relation(cond, positive_class, golden, golden_rel))
                        inferred.insert(*rel);
                }
        }
        if (inferred.size() == 1 && *inferred.begin() == golden_rel) sum += 1.0;
    }
    return sum / static_cast<double>(profile.golden_vars.size());
}

// Mean normalized closeness of rule literals to the golden values.
// Positive-class conditions are preferred; a variable mentioned only in other
// classes falls back to those, and an absent variable scores 0.
inline double fs3(const RuleSet& rule_set, const GoldenProfile& profile, const std::string& positive_label) {
    if (profile.golden_vars.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& name : profile.golden_vars) {
        const GoldenValue& golden = profile.values.at(name);
        auto range_it = profile.ranges.find(name);
        std::pair<double, double> range =
            range_it == profile.ranges.end() ? std::make_pair(0.0, 0.0) : range_it->second;

        auto collect = [&](bool positive_only) {
            std::vector<double> scores;
            for (const auto& cls : rule_set.classes) {
                if (positive_only != (cls.label == positive_label)) continue;
                for (const auto& rule : cls.rules)
                    for (const auto& cond : rule) {
                        if (cond.var != name) continue;
                        if (golden.numeric) {
                            if (!cond.numeric) continue;
                            scores.push_back(
                                normalized_value_score(ParsedValue::number(cond.number), golden, range));
                        } else {
                            if (cond.numeric) continue;
                            bool holds = std::find(cond.categories.begin(), cond.categories.end(),
                                                   golden.category) != cond.categories.end();
                            scores.push_back(holds ? 1.0 : 0.5);
                        }
                    }
            }
            return scores;
        };

        std::vector<double> scores = collect(true);
        if (scores.empty()) scores = collect(false);
        if (!scores.empty())
            sum += std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    }
    return sum / static_cast<double>(profile.golden_vars.size());
}

inline FeatureSetScore feature_set_score(const RuleSet& rule_set, const GoldenProfile& profile,
                                         const std::string& positive_label) {
    FeatureSetScore s;
    s.fs1 = fs1(rule_set, profile);
    s.fs2 = fs2(rule_set, profile, positive_label);
    s.fs3 = fs3(rule_set, profile, positive_label);
    s.mean = (s.fs1 + s.fs2 + s.fs3) / 3.0;
    return s;
}

// ---------------------------------------------------------------------------
// selection and aggregation

// TopK keeps the k highest means; DropK removes the k lowest. Ties prefer
// keeping the earlier index. Returned indices are ascending.
inline std::vector<int> select_feature_sets(const std::vector<FeatureSetScore>& scores, SelectionMode mode,
                                            int k) {
    const int n = static_cast<int>(scores.size());
    if (k < 0) throw InvalidK("k must be >= 0");
    if (mode == SelectionMode::TopK && k > n) throw InvalidK("TopK needs k <= number of sets");
    if (mode == SelectionMode::DropK && k >= n) throw InvalidK("DropK needs k < number of sets");

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> keep;
    if (mode == SelectionMode::TopK) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[static_cast<size_t>(a)].mean != scores[static_cast<size_t>(b)].mean)
                return scores[static_cast<size_t>(a)].mean > scores[static_cast<size_t>(b)].mean;
            return a < b;
        });
        keep.assign(order.begin(), order.begin() + k);
    } else {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[static_cast<size_t>(a)].mean != scores[static_cast<size_t>(b)].mean)
                return scores[static_cast<size_t>(a)].mean < scores[static_cast<size_t>(b)].mean;
            return a > b; // drop the later index on ties
        });
        std::set<int> dropped(order.begin(), order.begin() + k);
        for (int i = 0; i < n; ++i)
            if (!dropped.count(i)) keep.push_back(i);
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

inline TrialAggregate aggregate_trials(const std::vector<double>& overalls) {
    if (overalls.empty()) throw EmptyTrials("no trials to aggregate");
    TrialAggregate agg;
    agg.bias = std::accumulate(overalls.begin(), overalls.end(), 0.0) / static_cast<double>(overalls.size());
    double ss = 0.0;
    for (double v : overalls) ss += (v - agg.bias) * (v - agg.bias);
    agg.variance_proxy = std::sqrt(ss / static_cast<double>(overalls.size()));
    return agg;
}

} // namespace featdiag
