// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its runtime. Expected values come from brute-force oracles
// implemented here, independent of the library code they check.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "featdiag/featdiag.hpp"
#include "test_support.hpp"

using namespace featdiag;
using testsup::TempDir;

namespace {

class Criterion {
public:
    Criterion(const char* id, const char* name) : id_(id), name_(name), start_(clock_t::now()) {}

    void finish(bool pass) {
        double secs = std::chrono::duration<double>(clock_t::now() - start_).count();
        std::printf("[%s] %s — %s (%.2fs)\n", id_, pass ? "PASS" : "FAIL", name_, secs);
        std::fflush(stdout);
        REQUIRE(pass);
    }

    double elapsed() const { return std::chrono::duration<double>(clock_t::now() - start_).count(); }

private:
    using clock_t = std::chrono::steady_clock;
    const char* id_;
    const char* name_;
    clock_t::time_point start_;
};

bool close(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// random schema + profile generator for the scorer oracle

struct ScorerCase {
    Schema schema;
    GoldenProfile profile;
};

ScorerCase random_scorer_case(Rng& rng) {
    ScorerCase out;
    const size_t n_vars = 3 + rng.bounded(8);
    std::vector<VariableSpec> vars;
    for (size_t i = 0; i < n_vars; ++i) {
        std::string name = "v" + std::to_string(i);
        if (rng.bounded(3) == 0) {
            std::vector<std::string> cats;
            size_t n_cats = 2 + rng.bounded(3);
            for (size_t c = 0; c < n_cats; ++c) cats.push_back("c" + std::to_string(c));
            vars.push_back(testsup::categorical_var(name, cats));
        } else {
            vars.push_back(testsup::numeric_var(name));
        }
    }
    out.schema = testsup::make_schema(vars, "yes");

    std::vector<double> covs;
    for (size_t i = 0; i < n_vars; ++i)
        covs.push_back((1.0 + static_cast<double>(rng.bounded(1000))) / 1001.0);
    std::sort(covs.rbegin(), covs.rend());
    for (size_t i = 0; i < n_vars; ++i) {
        double sign = rng.bounded(2) ? 1.0 : -1.0;
        std::string top_cat =
            vars[i].kind == VarKind::Categorical ? vars[i].categories[rng.bounded(vars[i].categories.size())]
                                                 : "";
        out.profile.ranked.push_back({vars[i].name, covs[i], sign * covs[i], top_cat});
    }
    // profile.ranked is keyed by schema order here; sort descending like the real thing
    std::stable_sort(out.profile.ranked.begin(), out.profile.ranked.end(),
                     [](const RankedVar& a, const RankedVar& b) { return a.abs_cov > b.abs_cov; });

    const size_t n_golden = 1 + rng.bounded(n_vars);
    out.profile.gamma = out.profile.ranked[n_golden - 1].abs_cov;
    for (size_t g = 0; g < n_golden; ++g) {
        const auto& rv = out.profile.ranked[g];
        out.profile.golden_vars.push_back(rv.var);
        out.profile.relations.emplace(rv.var, rv.cov > 0 ? Relation::Positive : Relation::Negative);
        int idx = out.schema.index_of(rv.var);
        GoldenValue gv;
        if (out.schema.variables[static_cast<size_t>(idx)].kind == VarKind::Numeric) {
            gv.numeric = true;
        } else {
            gv.numeric = false;
            gv.category = rv.top_category;
        }
        gv.separation_score = 0.5 + static_cast<double>(rng.bounded(500)) / 1000.0;
        out.profile.values.emplace(rv.var, gv);
    }
    for (size_t i = 0; i < n_vars; ++i) {
        if (vars[i].kind != VarKind::Numeric) continue;
        double lo = static_cast<double>(rng.bounded(100));
        double hi = lo + 1.0 + static_cast<double>(rng.bounded(200));
        out.profile.ranges.emplace(vars[i].name, std::make_pair(lo, hi));
    }
    for (auto& [name, gv] : out.profile.values) {
        if (!gv.numeric) continue;
        auto [lo, hi] = out.profile.ranges.at(name);
        gv.threshold = lo + (hi - lo) * static_cast<double>(rng.bounded(1000)) / 999.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// independent scorer oracles

double rs1_oracle(const Ranking& r, const GoldenProfile& p) {
    double sum = 0;
    const double n = static_cast<double>(p.ranked.size());
    for (const auto& g : p.golden_vars) {
        double rank = n + 1;
        for (size_t i = 0; i < r.vars.size(); ++i)
            if (r.vars[i] == g) {
                rank = static_cast<double>(i + 1);
                break;
            }
        sum += 1.0 - (rank - 1.0) / n;
    }
    return sum / static_cast<double>(p.golden_vars.size());
}

double rs2_oracle(const RelationAnswer& a, const GoldenProfile& p) {
    double sum = 0;
    for (const auto& g : p.golden_vars) {
        auto it = a.relations.find(g);
        if (it == a.relations.end()) continue;
        if (it->second == RelationToken::Positive && p.relations.at(g) == Relation::Positive) sum += 1;
        if (it->second == RelationToken::Negative && p.relations.at(g) == Relation::Negative) sum += 1;
    }
    return sum / static_cast<double>(p.golden_vars.size());
}

double value_score_oracle(const ParsedValue& v, const GoldenValue& gv, std::pair<double, double> range) {
    if (gv.numeric) {
        if (!v.is_number()) return 0.0;
        auto norm = [&](double x) {
            if (range.second <= range.first) return 0.5;
            double t = (x - range.first) / (range.second - range.first);
            return t < 0 ? 0.0 : t > 1 ? 1.0 : t;
        };
        return 1.0 - std::fabs(norm(v.num) - norm(gv.threshold));
    }
    if (!v.is_category()) return 0.0;
    return v.cat == gv.category ? 1.0 : 0.5;
}

double rs3_oracle(const ValueAnswer& a, const GoldenProfile& p) {
    double sum = 0;
    for (const auto& g : p.golden_vars) {
        auto it = a.values.find(g);
        ParsedValue v = it == a.values.end() ? ParsedValue::unparsed() : it->second;
        auto rit = p.ranges.find(g);
        sum += value_score_oracle(v, p.values.at(g), rit == p.ranges.end() ? std::make_pair(0.0, 0.0)
                                                                           : rit->second);
    }
    return sum / static_cast<double>(p.golden_vars.size());
}

double fs1_oracle(const RuleSet& rs, const GoldenProfile& p) {
    std::set<std::string> mentioned;
    for (const auto& cls : rs.classes)
        for (const auto& rule : cls.rules)
            for (const auto& cond : rule) mentioned.insert(cond.var);
    if (mentioned.empty()) return 0.0;
    size_t hit = 0;
    for (const auto& g : p.golden_vars) hit += mentioned.count(g);
    double prec = static_cast<double>(hit) / static_cast<double>(mentioned.size());
    double rec = static_cast<double>(hit) / static_cast<double>(p.golden_vars.size());
    return prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
}

double fs2_oracle(const RuleSet& rs, const GoldenProfile& p, const std::string& positive) {
    double sum = 0;
    for (const auto& g : p.golden_vars) {
        std::set<int> dirs; // +1 positive, -1 negative
        const GoldenValue& gv = p.values.at(g);
        for (const auto& cls : rs.classes) {
            int polarity = cls.label == positive ? 1 : -1;
            for (const auto& rule : cls.rules)
                for (const auto& cond : rule) {
                    if (cond.var != g) continue;
                    if (cond.op == CondOp::Gt || cond.op == CondOp::Ge) dirs.insert(polarity);
                    else if (cond.op == CondOp::Lt || cond.op == CondOp::Le) dirs.insert(-polarity);
                    else if (!gv.numeric && !cond.numeric) {
                        bool on_golden = std::find(cond.categories.begin(), cond.categories.end(),
                                                   gv.category) != cond.categories.end();
                        if (!on_golden) continue;
                        int base = p.relations.at(g) == Relation::Positive ? 1 : -1;
                        if (cond.op == CondOp::Ne) base = -base;
                        dirs.insert(base * polarity);
                    }
                }
        }
        int want = p.relations.at(g) == Relation::Positive ? 1 : -1;
        if (dirs.size() == 1 && *dirs.begin() == want) sum += 1;
    }
    return sum / static_cast<double>(p.golden_vars.size());
}

double fs3_oracle(const RuleSet& rs, const GoldenProfile& p, const std::string& positive) {
    double sum = 0;
    for (const auto& g : p.golden_vars) {
        const GoldenValue& gv = p.values.at(g);
        auto rit = p.ranges.find(g);
        auto range = rit == p.ranges.end() ? std::make_pair(0.0, 0.0) : rit->second;
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<double> scores;
            for (const auto& cls : rs.classes) {
                if ((pass == 0) != (cls.label == positive)) continue;
                for (const auto& rule : cls.rules)
                    for (const auto& cond : rule) {
                        if (cond.var != g) continue;
                        if (gv.numeric && cond.numeric)
                            scores.push_back(value_score_oracle(ParsedValue::number(cond.number), gv, range));
                        else if (!gv.numeric && !cond.numeric)
                            scores.push_back(std::find(cond.categories.begin(), cond.categories.end(),
                                                       gv.category) != cond.categories.end()
                                                 ? 1.0
                                                 : 0.5);
                    }
            }
            if (!scores.empty()) {
                double s = 0;
                for (double v : scores) s += v;
                sum += s / static_cast<double>(scores.size());
                break;
            }
        }
    }
    return sum / static_cast<double>(p.golden_vars.size());
}

// ---------------------------------------------------------------------------
// random responses

Ranking random_ranking(Rng& rng, const Schema& schema) {
    std::vector<std::string> names;
    for (const auto& v : schema.variables) names.push_back(v.name);
    rng.shuffle(names);
    names.resize(rng.bounded(names.size() + 1));
    return Ranking{names};
}

RelationAnswer random_relations(Rng& rng, const Schema& schema) {
    RelationAnswer out;
    static const RelationToken kTokens[] = {RelationToken::Positive, RelationToken::Negative,
                                            RelationToken::Neutral, RelationToken::Unparsed};
    for (const auto& v : schema.variables) out.relations[v.name] = kTokens[rng.bounded(4)];
    return out;
}

ValueAnswer random_values(Rng& rng, const Schema& schema, const GoldenProfile& p) {
    ValueAnswer out;
    for (const auto& v : schema.variables) {
        switch (rng.bounded(3)) {
            case 0: out.values[v.name] = ParsedValue::unparsed(); break;
            case 1:
                if (v.kind == VarKind::Numeric) {
                    auto it = p.ranges.find(v.name);
                    double lo = it == p.ranges.end() ? 0.0 : it->second.first;
                    double hi = it == p.ranges.end() ? 1.0 : it->second.second;
                    out.values[v.name] =
                        ParsedValue::number(lo - 20 + (hi - lo + 40) * static_cast<double>(rng.bounded(1000)) / 999.0);
                } else {
                    out.values[v.name] = ParsedValue::category(v.categories[rng.bounded(v.categories.size())]);
                }
                break;
            default:
                // type-mismatched answers exercise the zero-credit paths
                if (v.kind == VarKind::Numeric) out.values[v.name] = ParsedValue::category("bogus");
                else out.values[v.name] = ParsedValue::number(static_cast<double>(rng.bounded(100)));
        }
    }
    return out;
}

// responses reproducing the profile exactly
Ranking perfect_ranking(const GoldenProfile& p) {
    Ranking r;
    for (const auto& rv : p.ranked) r.vars.push_back(rv.var);
    return r;
}

RelationAnswer perfect_relations(const GoldenProfile& p) {
    RelationAnswer a;
    for (const auto& g : p.golden_vars)
        a.relations[g] = p.relations.at(g) == Relation::Positive ? RelationToken::Positive
                                                                 : RelationToken::Negative;
    return a;
}

ValueAnswer perfect_values(const GoldenProfile& p) {
    ValueAnswer a;
    for (const auto& g : p.golden_vars) {
        const auto& gv = p.values.at(g);
        a.values[g] = gv.numeric ? ParsedValue::number(gv.threshold) : ParsedValue::category(gv.category);
    }
    return a;
}

RuleSet perfect_rules(const GoldenProfile& p) {
    RuleSet rs;
    ClassRules cls;
    cls.label = "yes";
    Rule rule;
    for (const auto& g : p.golden_vars) {
        const auto& gv = p.values.at(g);
        Condition cond;
        cond.var = g;
        if (gv.numeric) {
            cond.numeric = true;
            cond.number = gv.threshold;
            cond.op = p.relations.at(g) == Relation::Positive ? CondOp::Ge : CondOp::Le;
        } else {
            // equality on the golden category inherits its covariance sign,
            // so it reproduces the golden relation for either polarity
            cond.numeric = false;
            cond.categories = {gv.category};
            cond.op = CondOp::Eq;
        }
        rule.push_back(std::move(cond));
    }
    cls.rules.push_back(std::move(rule));
    rs.classes.push_back(std::move(cls));
    return rs;
}

} // namespace

// ===========================================================================

TEST_CASE("C1: scorer oracle suite") {
    Criterion crit("C1", "RS/FS scores match brute-force oracles; perfect=1, empty=0");
    Rng rng(20260810);
    bool ok = true;
    int cases = 0;
    for (; cases < 220; ++cases) {
        auto [schema, profile] = random_scorer_case(rng);

        auto ranking = random_ranking(rng, schema);
        ok &= close(rs1(ranking, profile).overall, rs1_oracle(ranking, profile));

        auto relations = random_relations(rng, schema);
        ok &= close(rs2(relations, profile).overall, rs2_oracle(relations, profile));

        auto values = random_values(rng, schema, profile);
        ok &= close(rs3(values, profile).overall, rs3_oracle(values, profile));

        auto rules = testsup::random_rule_set(rng, schema);
        ok &= close(fs1(rules, profile), fs1_oracle(rules, profile));
        ok &= close(fs2(rules, profile, "yes"), fs2_oracle(rules, profile, "yes"));
        ok &= close(fs3(rules, profile, "yes"), fs3_oracle(rules, profile, "yes"));

        // empty responses score 0 at every level
        ok &= rs1(Ranking{}, profile).overall == 0.0;
        ok &= rs2(RelationAnswer{}, profile).overall == 0.0;
        ok &= rs3(ValueAnswer{}, profile).overall == 0.0;
        ok &= fs1(RuleSet{}, profile) == 0.0;
        ok &= fs2(RuleSet{}, profile, "yes") == 0.0;
        ok &= fs3(RuleSet{}, profile, "yes") == 0.0;

        // profile-perfect responses score 1 (RS1 reaches 1 exactly when the
        // rank-score formula allows it, i.e. a single golden variable; with
        // more it must reach the formula's maximum, the perfect-ranking mean)
        double rs1_perfect = rs1(perfect_ranking(profile), profile).overall;
        if (profile.golden_vars.size() == 1) ok &= rs1_perfect == 1.0;
        double formula_max = 0.0;
        for (size_t i = 0; i < profile.golden_vars.size(); ++i)
            formula_max += 1.0 - static_cast<double>(i) / static_cast<double>(profile.ranked.size());
        formula_max /= static_cast<double>(profile.golden_vars.size());
        ok &= close(rs1_perfect, formula_max);
        ok &= rs2(perfect_relations(profile), profile).overall == 1.0;
        ok &= close(rs3(perfect_values(profile), profile).overall, 1.0);
        auto pr = perfect_rules(profile);
        ok &= close(fs1(pr, profile), 1.0);
        ok &= close(fs2(pr, profile, "yes"), 1.0);
        ok &= close(fs3(pr, profile, "yes"), 1.0);

        if (!ok) break;
    }
    ok &= cases >= 200;
    ok &= crit.elapsed() < 10.0;
    crit.finish(ok);
}

TEST_CASE("C2: golden-value exhaustive-sweep oracle") {
    Criterion crit("C2", "separation_score equals the exhaustive threshold sweep");
    Rng rng(4096);
    bool ok = true;
    int valid = 0;
    while (valid < 110 && ok) {
        size_t n = 20 + rng.bounded(181); // up to 200 rows
        std::vector<double> x;
        std::vector<int> y;
        for (size_t i = 0; i < n; ++i) {
            x.push_back(static_cast<double>(rng.bounded(24)) / 3.0);
            y.push_back(static_cast<int>(rng.bounded(2)));
        }
        y[0] = 0;
        y[1] = 1;
        auto ds = testsup::single_feature_dataset(x, y);

        Relation rel;
        try {
            rel = compute_golden_relation("f", ds);
        } catch (const ZeroCovariance&) {
            continue;
        }
        std::vector<double> distinct = x;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) continue;

        double best = -1.0, best_v = 0.0;
        for (double v : distinct) {
            size_t tp = 0, fn = 0, tn = 0, fp = 0;
            for (size_t i = 0; i < n; ++i) {
                bool pred = rel == Relation::Positive ? x[i] >= v : x[i] <= v;
                if (y[i]) (pred ? tp : fn) += 1;
                else (pred ? fp : tn) += 1;
            }
            double ba = (static_cast<double>(tp) / static_cast<double>(tp + fn) +
                         static_cast<double>(tn) / static_cast<double>(tn + fp)) /
                        2.0;
            if (ba > best) {
                best = ba;
                best_v = v;
            }
        }
        auto gv = compute_golden_value("f", ds);
        ok &= close(gv.separation_score, best);
        ok &= gv.threshold == best_v; // smallest maximizing threshold
        ok &= gv.separation_score >= 0.5;
        ++valid;
    }
    ok &= valid >= 100;
    ok &= crit.elapsed() < 30.0;
    crit.finish(ok);
}

TEST_CASE("C3: elbow determinism and scale invariance") {
    Criterion crit("C3", "x1000 rescaling leaves the profile unchanged modulo raw units");
    Rng rng(555);
    bool ok = true;
    for (int round = 0; round < 10; ++round) {
        std::vector<std::vector<Value>> rows;
        std::vector<int> y;
        for (int i = 0; i < 80; ++i) {
            int cls = static_cast<int>(rng.bounded(2));
            rows.push_back({Value::number(static_cast<double>(rng.bounded(60) + 30 * cls)),
                            Value::number(static_cast<double>(rng.bounded(90) + 10 * cls)),
                            Value::number(static_cast<double>(rng.bounded(100))),
                            Value::category(rng.bounded(3) == 0 ? (cls ? "b" : "a") : (cls ? "a" : "b"))});
            y.push_back(cls);
        }
        auto schema = testsup::make_schema({testsup::numeric_var("p"), testsup::numeric_var("q"),
                                            testsup::numeric_var("r"),
                                            testsup::categorical_var("c", {"a", "b"})});
        auto base_ds = testsup::make_dataset(schema, rows, y);
        for (auto& row : rows)
            for (auto& v : row)
                if (v.is_number()) v = Value::number(v.num * 1000.0);
        auto scaled_ds = testsup::make_dataset(schema, rows, y);

        auto base = compute_golden_profile(base_ds);
        auto scaled = compute_golden_profile(scaled_ds);

        ok &= base.ranked.size() == scaled.ranked.size();
        for (size_t i = 0; i < base.ranked.size() && ok; ++i) {
            ok &= base.ranked[i].var == scaled.ranked[i].var;
            ok &= base.ranked[i].abs_cov == scaled.ranked[i].abs_cov; // exact: integer data
        }
        ok &= base.gamma == scaled.gamma;
        ok &= base.golden_vars == scaled.golden_vars;
        for (const auto& g : base.golden_vars) {
            ok &= base.relations.at(g) == scaled.relations.at(g);
            const auto& gb = base.values.at(g);
            const auto& gs = scaled.values.at(g);
            ok &= gb.separation_score == gs.separation_score;
            if (gb.numeric) {
                auto [lo_b, hi_b] = base.ranges.at(g);
                auto [lo_s, hi_s] = scaled.ranges.at(g);
                ok &= normalize(gb.threshold, lo_b, hi_b) == normalize(gs.threshold, lo_s, hi_s);
                ok &= gs.threshold == gb.threshold * 1000.0; // raw units scale along
            } else {
                ok &= gb.category == gs.category;
            }
        }
        if (!ok) break;
    }
    crit.finish(ok);
}

TEST_CASE("C4: sampling distance formulas and best/worst optima") {
    Criterion crit("C4", "appendix distance grid and hand-enumerated selections");
    bool ok = true;

    auto schema = testsup::make_schema({testsup::numeric_var("f")});
    int points = 0;
    for (double g : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        for (int i = 0; i < 10; ++i) {
            double n = i / 9.0;
            ++points;
            {
                GoldenProfile p;
                p.ranked = {{"f", 0.2, 0.2, ""}};
                p.golden_vars = {"f"};
                p.relations.emplace("f", Relation::Positive);
                GoldenValue gv;
                gv.numeric = true;
                gv.threshold = g;
                p.values.emplace("f", gv);
                p.ranges.emplace("f", std::make_pair(0.0, 1.0));
                double expected = n > g ? std::fabs(n - g) : std::fabs(n - g) + std::fabs(1.0 - g);
                ok &= close(sample_distance(Sample{{Value::number(n)}}, schema, "f", p), expected);
                p.relations.at("f") = Relation::Negative;
                double expected_neg = n < g ? std::fabs(n - g) : std::fabs(n - g) + g;
                ok &= close(sample_distance(Sample{{Value::number(n)}}, schema, "f", p), expected_neg);
            }
        }
    }
    ok &= points == 50;

    // 20-row fixture: hand enumeration of best and worst picks
    GoldenProfile p;
    p.ranked = {{"f", 0.2, 0.2, ""}};
    p.golden_vars = {"f"};
    p.relations.emplace("f", Relation::Positive);
    GoldenValue gv;
    gv.numeric = true;
    gv.threshold = 0.6;
    p.values.emplace("f", gv);
    p.ranges.emplace("f", std::make_pair(0.0, 1.0));

    std::vector<double> vals;
    std::vector<std::vector<Value>> rows;
    std::vector<int> y;
    Rng rng(9000);
    for (int i = 0; i < 20; ++i) {
        double v = static_cast<double>(rng.bounded(1000)) / 999.0;
        vals.push_back(v);
        rows.push_back({Value::number(v)});
        y.push_back(1);
    }
    auto pool = testsup::make_dataset(schema, rows, y);

    auto dist = [&](double n) { return n > 0.6 ? n - 0.6 : 0.6 - n + 0.4; };
    std::vector<size_t> order(vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dist(vals[a]) != dist(vals[b])) return dist(vals[a]) < dist(vals[b]);
        return a < b;
    });
    auto best = select_examples(pool, {SamplingStrategy::Best, 3, 0, false}, p);
    for (int i = 0; i < 3; ++i) ok &= best[static_cast<size_t>(i)].first.values[0].num == vals[order[static_cast<size_t>(i)]];
    auto worst = select_examples(pool, {SamplingStrategy::Worst, 3, 0, false}, p);
    for (int i = 0; i < 3; ++i)
        ok &= worst[static_cast<size_t>(i)].first.values[0].num == vals[order[order.size() - 1 - static_cast<size_t>(i)]];

    crit.finish(ok);
}

TEST_CASE("C5: rule parser round-trips and in-paper examples") {
    Criterion crit("C5", "100 print->parse round-trips plus the worked rule forms");
    bool ok = true;

    auto schema = testsup::make_schema(
        {testsup::numeric_var("glucose"), testsup::numeric_var("age"), testsup::numeric_var("insulin"),
         testsup::categorical_var("color", {"red", "green", "blue"})},
        "yes");

    Rng rng(31337);
    for (int round = 0; round < 100; ++round) {
        RuleSet rs = testsup::random_rule_set(rng, schema);
        RuleSet back = parse_rule_set(print_rule_set(rs), schema, 1 << 20);
        ok &= back == rs;
        if (!ok) break;
    }

    // single threshold rule
    auto r1 = parse_rule_set("yes: Glucose >= 100", schema, 8);
    ok &= r1.classes.size() == 1 && r1.classes[0].rules.size() == 1;
    ok &= r1.classes[0].rules[0][0] == Condition{"glucose", CondOp::Ge, true, 100.0, {}};

    // conjunction of two threshold conditions
    auto r2 = parse_rule_set("yes: Age >= 40 AND Glucose >= 100", schema, 8);
    ok &= r2.classes[0].rules[0].size() == 2;
    ok &= r2.classes[0].rules[0][0] == Condition{"age", CondOp::Ge, true, 40.0, {}};
    ok &= r2.classes[0].rules[0][1] == Condition{"glucose", CondOp::Ge, true, 100.0, {}};

    // the ineffective-rule example: lower-bounded conjunction for the positive class
    auto r3 = parse_rule_set("yes: Glucose <= 100 AND Insulin <= 10", schema, 8);
    ok &= r3.classes[0].rules[0][0] == Condition{"glucose", CondOp::Le, true, 100.0, {}};
    ok &= r3.classes[0].rules[0][1] == Condition{"insulin", CondOp::Le, true, 10.0, {}};

    crit.finish(ok);
}

TEST_CASE("C6: classifier sanity") {
    Criterion crit("C6", "separable AUROC 1.0, gradient check, worked AUROC example");
    bool ok = true;

    // 40-row linearly separable fixture through the featurization path
    auto schema = testsup::make_schema({testsup::numeric_var("x")});
    std::vector<std::vector<Value>> rows;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({Value::number(static_cast<double>(i))});
        y.push_back(i >= 20 ? 1 : 0);
    }
    auto ds = testsup::make_dataset(schema, std::move(rows), std::move(y));
    auto rules = parse_rule_set("yes: x >= 20\nno: x < 20", schema, 4);
    auto X = featurize(rules, ds);
    auto model = train_logreg(X, ds.y, 17);
    ok &= auroc(predict_proba(model, X), ds.y) == 1.0;

    // central finite differences at 20 random points
    Rng rng(606);
    BinaryFeatureMatrix G;
    G.n_rows = 12;
    for (int j = 0; j < 4; ++j) {
        FeatureColumn col{"yes", j, {}};
        for (int i = 0; i < 12; ++i) col.values.push_back(static_cast<uint8_t>(rng.bounded(2)));
        G.columns.push_back(std::move(col));
    }
    std::vector<int> gy;
    for (int i = 0; i < 12; ++i) gy.push_back(i % 2);
    const double h = 1e-6;
    for (int point = 0; point < 20 && ok; ++point) {
        std::vector<double> w(4);
        for (auto& v : w) v = (static_cast<double>(rng.bounded(4000)) - 2000.0) / 700.0;
        double b = (static_cast<double>(rng.bounded(4000)) - 2000.0) / 700.0;
        auto obj = logreg_objective(G, gy, w, b, 0.25);
        for (size_t j = 0; j < w.size(); ++j) {
            auto wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            double numeric =
                (logreg_objective(G, gy, wp, b, 0.25).loss - logreg_objective(G, gy, wm, b, 0.25).loss) /
                (2 * h);
            double denom = std::max(std::fabs(numeric), 1e-8);
            ok &= std::fabs(obj.grad_weights[j] - numeric) / denom < 1e-5;
        }
        double numeric_b =
            (logreg_objective(G, gy, w, b + h, 0.25).loss - logreg_objective(G, gy, w, b - h, 0.25).loss) /
            (2 * h);
        ok &= std::fabs(obj.grad_intercept - numeric_b) / std::max(std::fabs(numeric_b), 1e-8) < 1e-5;
    }

    ok &= auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75;

    crit.finish(ok);
}

TEST_CASE("C7: feature-set selection improves test AUROC") {
    Criterion crit("C7", "TopK(3) finds the planted sets; selected ensemble beats all-sets by 0.05");
    bool ok = true;
    TempDir dir("c7");

    // planted dataset: y = (s1 >= 60 and s2 <= 40); n1..n3 are noise
    detail::write_file(dir.str("schema.json"), R"({
  "task_description": "Synthetic planted-threshold classification task.",
  "target": {"name": "label", "positive_label": "yes"},
  "variables": [
    {"name": "s1", "kind": "numeric"}, {"name": "s2", "kind": "numeric"},
    {"name": "n1", "kind": "numeric"}, {"name": "n2", "kind": "numeric"},
    {"name": "n3", "kind": "numeric"}
  ]
})");
    Rng rng(77);
    std::string csv = "s1,s2,n1,n2,n3,label\n";
    for (int i = 0; i < 300; ++i) {
        int s1 = static_cast<int>(rng.bounded(100));
        int s2 = static_cast<int>(rng.bounded(100));
        int n1 = static_cast<int>(rng.bounded(100));
        int n2 = static_cast<int>(rng.bounded(100));
        int n3 = static_cast<int>(rng.bounded(100));
        bool pos = s1 >= 60 && s2 <= 40;
        csv += std::to_string(s1) + "," + std::to_string(s2) + "," + std::to_string(n1) + "," +
               std::to_string(n2) + "," + std::to_string(n3) + "," + (pos ? "yes" : "no") + "\n";
    }
    detail::write_file(dir.str("dataset.csv"), csv);
    detail::write_file(dir.str("store.jsonl"), "");
    nlohmann::ordered_json cfg_doc = {{"dataset", "dataset.csv"},
                                      {"schema", "schema.json"},
                                      {"backend", "replay"},
                                      {"gateway", {{"replay_path", "store.jsonl"}}},
                                      {"shots", 8},
                                      {"n_feature_sets", 10},
                                      {"selection", {{"mode", "topk"}, {"k", 3}}},
                                      {"base_seed", 123},
                                      {"out_dir", "out"}};
    detail::write_file(dir.str("config.json"), cfg_doc.dump(2) + "\n");
    RunConfig cfg = load_config(dir.str("config.json"));

    Dataset dataset = load_dataset(cfg.dataset_path, cfg.schema_path);
    std::ostringstream log;
    cmd_golden(cfg, log);
    auto profile = profile_from_json(nlohmann::json::parse(detail::read_file(cfg.out_dir + "/golden.json")));
    ok &= std::set<std::string>(profile.golden_vars.begin(), profile.golden_vars.end()) ==
          std::set<std::string>{"s1", "s2"};

    // spurious thresholds: strongest train-split correlations on noise vars
    auto [train, test] = split(dataset, cfg.base_seed, static_cast<size_t>(cfg.shots));
    auto train_corr = [&](const std::string& var, bool ge, int t) {
        int j = train.schema.index_of(var);
        std::vector<double> col;
        for (const auto& row : train.rows) {
            double v = row.values[static_cast<size_t>(j)].num;
            col.push_back((ge ? v >= t : v <= t) ? 1.0 : 0.0);
        }
        std::vector<double> yy(train.y.begin(), train.y.end());
        try {
            return covariance(col, yy);
        } catch (const Error&) {
            return 0.0;
        }
    };
    struct Spurious {
        std::string var;
        bool ge;
        int t;
        double strength;
    };
    std::vector<Spurious> spurious;
    for (const std::string var : {"n1", "n2", "n3"})
        for (int t = 5; t <= 95; t += 5)
            for (bool ge : {true, false}) spurious.push_back({var, ge, t, std::fabs(train_corr(var, ge, t))});
    std::sort(spurious.begin(), spurious.end(), [](const Spurious& a, const Spurious& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        return std::tie(a.var, a.t, a.ge) < std::tie(b.var, b.t, b.ge);
    });

    const std::set<int> planted = {2, 5, 8};
    std::filesystem::create_directories(cfg.out_dir);
    int bad = 0;
    for (int i = 0; i < 10; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "ruleset_%02d.rules", i);
        std::string text;
        if (planted.count(i)) {
            int jitter = i == 2 ? 0 : i == 5 ? 1 : -1;
            text = "yes: s1 >= " + std::to_string(60 + jitter) + " AND s2 <= " + std::to_string(40 - jitter) +
                   "\nno: s1 < " + std::to_string(60 + jitter) + " OR s2 > " + std::to_string(40 - jitter) +
                   "\n";
        } else {
            const auto& sp = spurious[static_cast<size_t>(bad++)];
            std::string op = sp.ge ? ">=" : "<=";
            std::string inv = sp.ge ? "<" : ">";
            text = "yes: " + sp.var + " " + op + " " + std::to_string(sp.t) + "\nno: " + sp.var + " " + inv +
                   " " + std::to_string(sp.t) + "\n";
        }
        detail::write_file(cfg.out_dir + "/" + name, text);
    }

    auto scores = cmd_evaluate(cfg, log);
    std::vector<int> indices = scores["selection"]["indices"].get<std::vector<int>>();
    ok &= indices == std::vector<int>{2, 5, 8};

    auto predict = cmd_predict(cfg, log);
    double all = predict["auroc_all_sets"].get<double>();
    double sel = predict["auroc_selected"].get<double>();
    std::printf("[C7] planted selection=%s  auroc_all=%.4f auroc_selected=%.4f\n",
                (indices == std::vector<int>{2, 5, 8}) ? "exact" : "WRONG", all, sel);
    ok &= sel >= all + 0.05;
    ok &= crit.elapsed() < 60.0;
    crit.finish(ok);
}

TEST_CASE("C8: end-to-end determinism under the committed replay store") {
    Criterion crit("C8", "two replayed pipeline runs produce byte-identical reports");
    bool ok = true;

    const std::string demo_config = std::string(FEATDIAG_SOURCE_DIR) + "/demo/config.json";
    REQUIRE(std::filesystem::exists(demo_config));

    TempDir run1("c8-run1");
    TempDir run2("c8-run2");
    auto run_all = [&](const std::string& out_dir) {
        RunConfig cfg = load_config(demo_config);
        cfg.out_dir = out_dir;
        std::ostringstream log;
        cmd_golden(cfg, log);
        auto report = cmd_diagnose(cfg, log);
        for (const auto& trial : report["trials"]) ok &= !trial.contains("errors"); // store must be complete
        cmd_generate(cfg, log);
        cmd_evaluate(cfg, log);
        cmd_predict(cfg, log);
    };
    run_all(run1.str());
    run_all(run2.str());

    std::vector<std::string> files = {"golden.json", "report.json", "generate.json", "scores.json",
                                      "predict.json", "models.json"};
    RunConfig cfg = load_config(demo_config);
    for (int i = 0; i < cfg.n_feature_sets; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "ruleset_%02d.rules", i);
        files.emplace_back(name);
    }
    for (const auto& f : files) {
        ok &= std::filesystem::exists(run1.str(f));
        ok &= std::filesystem::exists(run2.str(f));
        if (ok) ok &= detail::read_file(run1.str(f)) == detail::read_file(run2.str(f));
        if (!ok) {
            std::printf("[C8] mismatch or missing: %s\n", f.c_str());
            break;
        }
    }
    crit.finish(ok);
}
