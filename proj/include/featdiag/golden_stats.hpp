#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"

namespace featdiag {

enum class Relation { Positive, Negative };

inline Relation flip(Relation r) { return r == Relation::Positive ? Relation::Negative : Relation::Positive; }

inline std::string relation_name(Relation r) { return r == Relation::Positive ? "positive" : "negative"; }

// The class-separating value of a golden variable: a numeric threshold or a
// category, together with the balanced accuracy of the one-condition
// classifier it induces.
struct GoldenValue {
    bool numeric = true;
    double threshold = 0.0;
    std::string category;
    double separation_score = 0.0;
};

struct RankedVar {
    std::string var;
    double abs_cov = 0.0;
    double cov = 0.0;             // signed covariance of the representative column
    std::string top_category;    // categorical only: category of that column
};

// Dataset-derived ground truth for all three diagnosis levels.
struct GoldenProfile {
    std::vector<RankedVar> ranked;                       // every variable, descending |cov|
    double gamma = 0.0;                                  // elbow threshold
    std::vector<std::string> golden_vars;                // prefix of ranked
    std::map<std::string, Relation> relations;           // golden vars only
    std::map<std::string, GoldenValue> values;           // golden vars only
    std::map<std::string, std::pair<double, double>> ranges; // all numeric vars
    std::vector<std::string> warnings;

    bool is_golden(const std::string& var) const {
        return std::find(golden_vars.begin(), golden_vars.end(), var) != golden_vars.end();
    }
    int n_vars() const { return static_cast<int>(ranked.size()); }
};

// ---------------------------------------------------------------------------
// covariance

// Population covariance of the min-max-normalized column against the binary
// target. Normalizing first makes magnitudes comparable across variables,
// which the elbow threshold depends on.
inline double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("covariance inputs differ in length: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.size() < 2) throw LengthMismatch("covariance needs at least 2 observations");
    const size_t n = x.size();
    double lo = x[0], hi = x[0];
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double xn = normalize(x[i], lo, hi);
        sx += xn;
        sy += y[i];
        sxy += xn * y[i];
    }
    const double dn = static_cast<double>(n);
    return sxy / dn - (sx / dn) * (sy / dn);
}

namespace detail {

inline std::vector<double> y_as_double(const Dataset& ds) {
    std::vector<double> y(ds.y.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(ds.y[i]);
    return y;
}

inline bool both_classes(const Dataset& ds) {
    bool pos = false, neg = false;
    for (int v : ds.y) (v ? pos : neg) = true;
    return pos && neg;
}

// Signed covariance of a variable's representative encoded column. For
// categoricals this is the one-hot indicator with the highest |cov|
// (ties resolved by declared category order).
struct RepresentativeCov {
    double cov = 0.0;
    std::string category; // empty for numeric
};

inline RepresentativeCov representative_cov(const Dataset& ds, size_t var_index, const std::vector<double>& y) {
    const auto& var = ds.schema.variables[var_index];
    const size_t n = ds.rows.size();
    if (var.kind == VarKind::Numeric) {
        std::vector<double> col(n, 0.0);
        double sum = 0.0;
        size_t count = 0;
        for (size_t r = 0; r < n; ++r) {
            const Value& v = ds.rows[r].values[var_index];
            if (v.is_number()) {
                sum += v.num;
                ++count;
            }
        }
        const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
        for (size_t r = 0; r < n; ++r) {
            const Value& v = ds.rows[r].values[var_index];
            col[r] = v.is_number() ? v.num : mean;
        }
        return {covariance(col, y), ""};
    }
    RepresentativeCov best;
    bool first = true;
    for (const auto& cat : var.categories) {
        std::vector<double> ind(n, 0.0);
        for (size_t r = 0; r < n; ++r) {
            const Value& v = ds.rows[r].values[var_index];
            if (v.is_category() && v.cat == cat) ind[r] = 1.0;
        }
        double c = covariance(ind, y);
        if (first || std::fabs(c) > std::fabs(best.cov)) {
            best = {c, cat};
            first = false;
        }
    }
    return best;
}

} // namespace detail

// ---------------------------------------------------------------------------
// level 1: golden variables

// Elbow rule over a descending |cov| sequence: cut at the widest consecutive
// gap (earliest on ties), gamma = gap midpoint. Returns (prefix length, gamma).
inline std::pair<size_t, double> elbow_cut(const std::vector<double>& sorted_abs) {
    if (sorted_abs.empty()) throw DegenerateDataset("elbow over empty sequence");
    if (sorted_abs.size() == 1) return {1, sorted_abs[0]};
    size_t best = 0;
    double best_gap = -1.0;
    for (size_t i = 0; i + 1 < sorted_abs.size(); ++i) {
        double gap = sorted_abs[i] - sorted_abs[i + 1];
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return {best + 1, (sorted_abs[best] + sorted_abs[best + 1]) / 2.0};
}

struct GoldenVariableResult {
    std::vector<RankedVar> ranked;
    double gamma = 0.0;
    std::vector<std::string> golden_vars;
    std::vector<std::string> warnings;
};

inline GoldenVariableResult compute_golden_variables(const Dataset& ds) {
    if (ds.rows.size() < 2) throw DegenerateDataset("need at least 2 rows");
    if (!detail::both_classes(ds)) throw DegenerateDataset("target has a single class");

    const auto y = detail::y_as_double(ds);
    GoldenVariableResult res;
    res.ranked.reserve(ds.schema.variables.size());
    for (size_t j = 0; j < ds.schema.variables.size(); ++j) {
        auto rep = detail::representative_cov(ds, j, y);
        res.ranked.push_back({ds.schema.variables[j].name, std::fabs(rep.cov), rep.cov, rep.category});
    }
    std::stable_sort(res.ranked.begin(), res.ranked.end(),
                     [](const RankedVar& a, const RankedVar& b) { return a.abs_cov > b.abs_cov; });

    std::vector<double> abs;
    abs.reserve(res.ranked.size());
    for (const auto& r : res.ranked) abs.push_back(r.abs_cov);
    auto [cut, gamma] = elbow_cut(abs);
    res.gamma = gamma;
    for (size_t i = 0; i < cut; ++i) {
        if (res.ranked[i].cov == 0.0) {
            res.warnings.push_back("variable '" + res.ranked[i].var +
                                   "' reached the golden prefix with zero covariance; dropped");
            continue;
        }
        res.golden_vars.push_back(res.ranked[i].var);
    }
    if (res.golden_vars.empty())
        throw DegenerateDataset("no variable has nonzero covariance with the target");
    return res;
}

// ---------------------------------------------------------------------------
// level 2: golden relations

inline Relation compute_golden_relation(const std::string& feature, const Dataset& ds) {
    int j = ds.schema.index_of(feature);
    if (j < 0) throw SchemaMismatch("unknown variable: " + feature);
    const auto y = detail::y_as_double(ds);
    auto rep = detail::representative_cov(ds, static_cast<size_t>(j), y);
    if (rep.cov == 0.0) throw ZeroCovariance("relation undefined for '" + feature + "' (zero covariance)");
    return rep.cov > 0.0 ? Relation::Positive : Relation::Negative;
}

// ---------------------------------------------------------------------------
// level 3: golden values

namespace detail {

// Balanced accuracy (TPR+TNR)/2 of a fixed binary prediction vector.
inline double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 1) (pred[i] == 1 ? tp : fn) += 1;
        else (pred[i] == 1 ? fp : tn) += 1;
    }
    if (tp + fn == 0 || tn + fp == 0) throw DegenerateDataset("balanced accuracy needs both classes");
    double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
    double tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return (tpr + tnr) / 2.0;
}

} // namespace detail

// Numeric: sweeps every distinct observed value as a threshold; the classifier
// predicts positive on f >= v (Positive relation) or f <= v (Negative);
// returns the threshold maximizing balanced accuracy, smallest on ties.
// Categorical: the category whose indicator carries the highest |cov|.
// Rows with a missing feature value are excluded from the sweep.
inline GoldenValue compute_golden_value(const std::string& feature, const Dataset& ds) {
    int ji = ds.schema.index_of(feature);
    if (ji < 0) throw SchemaMismatch("unknown variable: " + feature);
    const size_t j = static_cast<size_t>(ji);
    const auto& var = ds.schema.variables[j];

    if (var.kind == VarKind::Numeric) {
        std::vector<double> f;
        std::vector<int> yy;
        for (size_t r = 0; r < ds.rows.size(); ++r) {
            const Value& v = ds.rows[r].values[j];
            if (!v.is_number()) continue;
            f.push_back(v.num);
            yy.push_back(ds.y[r]);
        }
        std::vector<double> distinct = f;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) throw ConstantFeature("'" + feature + "' has fewer than 2 distinct values");

        const Relation rel = compute_golden_relation(feature, ds);
        GoldenValue best;
        best.numeric = true;
        bool first = true;
        std::vector<int> pred(f.size(), 0);
        for (double v : distinct) {
            for (size_t i = 0; i < f.size(); ++i)
                pred[i] = (rel == Relation::Positive ? f[i] >= v : f[i] <= v) ? 1 : 0;
            double score = detail::balanced_accuracy(pred, yy);
            if (first || score > best.separation_score) {
                best.threshold = v;
                best.separation_score = score;
                first = false;
            }
        }
        return best;
    }

    if (var.categories.size() < 2) throw ConstantFeature("'" + feature + "' has fewer than 2 categories");
    const auto y = detail::y_as_double(ds);
    auto rep = detail::representative_cov(ds, j, y);
    if (rep.cov == 0.0) throw ZeroCovariance("golden value undefined for '" + feature + "' (zero covariance)");

    std::vector<int> pred, yy;
    for (size_t r = 0; r < ds.rows.size(); ++r) {
        const Value& v = ds.rows[r].values[j];
        if (v.is_missing()) continue;
        bool match = v.is_category() && v.cat == rep.category;
        pred.push_back((rep.cov > 0.0 ? match : !match) ? 1 : 0);
        yy.push_back(ds.y[r]);
    }
    GoldenValue gv;
    gv.numeric = false;
    gv.category = rep.category;
    gv.separation_score = detail::balanced_accuracy(pred, yy);
    return gv;
}

// ---------------------------------------------------------------------------
// full profile

inline GoldenProfile compute_golden_profile(const Dataset& ds) {
    auto vars = compute_golden_variables(ds);
    GoldenProfile profile;
    profile.ranked = std::move(vars.ranked);
    profile.gamma = vars.gamma;
    profile.golden_vars = std::move(vars.golden_vars);
    profile.warnings = std::move(vars.warnings);
    for (const auto& name : profile.golden_vars) {
        profile.relations.emplace(name, compute_golden_relation(name, ds));
        profile.values.emplace(name, compute_golden_value(name, ds));
    }
    for (const auto& var : ds.schema.variables)
        if (var.kind == VarKind::Numeric && var.has_range())
            profile.ranges.emplace(var.name, std::make_pair(var.observed_min, var.observed_max));
    return profile;
}

inline nlohmann::ordered_json profile_to_json(const GoldenProfile& p) {
    nlohmann::ordered_json doc;
    doc["ranked"] = nlohmann::ordered_json::array();
    for (const auto& r : p.ranked) doc["ranked"].push_back({{"var", r.var}, {"abs_cov", r.abs_cov}});
    doc["gamma"] = p.gamma;
    doc["golden"] = nlohmann::ordered_json::array();
    for (const auto& name : p.golden_vars) {
        const auto& gv = p.values.at(name);
        nlohmann::ordered_json entry;
        entry["var"] = name;
        entry["relation"] = relation_name(p.relations.at(name));
        if (gv.numeric) entry["value"] = gv.threshold;
        else entry["value"] = gv.category;
        entry["separation_score"] = gv.separation_score;
        doc["golden"].push_back(std::move(entry));
    }
    doc["ranges"] = nlohmann::ordered_json::object();
    for (const auto& [var, range] : p.ranges) doc["ranges"][var] = {range.first, range.second};
    return doc;
}

inline GoldenProfile profile_from_json(const nlohmann::json& doc) {
    GoldenProfile p;
    for (const auto& r : doc.at("ranked"))
        p.ranked.push_back({r.at("var").get<std::string>(), r.at("abs_cov").get<double>(), 0.0, ""});
    p.gamma = doc.at("gamma").get<double>();
    for (const auto& g : doc.at("golden")) {
        std::string var = g.at("var").get<std::string>();
        p.golden_vars.push_back(var);
        p.relations.emplace(var, g.at("relation").get<std::string>() == "positive" ? Relation::Positive
                                                                                   : Relation::Negative);
        GoldenValue gv;
        if (g.at("value").is_number()) {
            gv.numeric = true;
            gv.threshold = g.at("value").get<double>();
        } else {
            gv.numeric = false;
            gv.category = g.at("value").get<std::string>();
        }
        gv.separation_score = g.at("separation_score").get<double>();
        p.values.emplace(var, gv);
    }
    if (doc.contains("ranges"))
        for (const auto& [var, range] : doc.at("ranges").items())
            p.ranges.emplace(var, std::make_pair(range.at(0).get<double>(), range.at(1).get<double>()));
    return p;
}

} // namespace featdiag
