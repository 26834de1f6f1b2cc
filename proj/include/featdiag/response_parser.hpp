#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdiag/common.hpp"
#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"

namespace featdiag {

// ---------------------------------------------------------------------------
// parse results

struct Ranking {
    std::vector<std::string> vars; // normalized, deduplicated, first mention wins
};

enum class RelationToken { Positive, Negative, Neutral, Unparsed };

struct RelationAnswer {
    std::map<std::string, RelationToken> relations; // every schema variable, default Unparsed
};

struct ParsedValue {
    enum class Kind { Number, Category, Unparsed } kind = Kind::Unparsed;
    double num = 0.0;
    std::string cat;

    static ParsedValue number(double v) { return {Kind::Number, v, {}}; }
    static ParsedValue category(std::string c) { return {Kind::Category, 0.0, std::move(c)}; }
    static ParsedValue unparsed() { return {}; }

    bool is_number() const { return kind == Kind::Number; }
    bool is_category() const { return kind == Kind::Category; }
    bool is_unparsed() const { return kind == Kind::Unparsed; }
};

struct ValueAnswer {
    std::map<std::string, ParsedValue> values; // every schema variable, default Unparsed
};

// ---------------------------------------------------------------------------
// rule sets

enum class CondOp { Lt, Le, Gt, Ge, Eq, Ne, In };

inline std::string op_symbol(CondOp op) {
    switch (op) {
        case CondOp::Lt: return "<";
        case CondOp::Le: return "<=";
        case CondOp::Gt: return ">";
        case CondOp::Ge: return ">=";
        case CondOp::Eq: return "==";
        case CondOp::Ne: return "!=";
        case CondOp::In: return "in";
    }
    return "==";
}

struct Condition {
    std::string var; // normalized schema name
    CondOp op = CondOp::Eq;
    bool numeric = false;
    double number = 0.0;
    std::vector<std::string> categories; // 1 entry for ==/!=, n for in

    friend bool operator==(const Condition& a, const Condition& b) {
        return a.var == b.var && a.op == b.op && a.numeric == b.numeric &&
               (a.numeric ? a.number == b.number : a.categories == b.categories);
    }
};

using Rule = std::vector<Condition>; // conjunction

struct ClassRules {
    std::string label; // normalized
    std::vector<Rule> rules;

    friend bool operator==(const ClassRules& a, const ClassRules& b) {
        return a.label == b.label && a.rules == b.rules;
    }
};

struct RuleSet {
    std::vector<ClassRules> classes; // first-appearance order

    bool empty() const {
        for (const auto& c : classes)
            if (!c.rules.empty()) return false;
        return true;
    }

    std::set<std::string> variables() const {
        std::set<std::string> out;
        for (const auto& c : classes)
            for (const auto& rule : c.rules)
                for (const auto& cond : rule) out.insert(cond.var);
        return out;
    }

    friend bool operator==(const RuleSet& a, const RuleSet& b) { return a.classes == b.classes; }
};

// ---------------------------------------------------------------------------
// shared lexical helpers

namespace detail {

inline bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// First word-bounded occurrence of `needle` in lowercased `haystack`;
// underscores in the needle also match spaces.
inline std::optional<size_t> find_mention(const std::string& haystack_lower, const std::string& needle) {
    auto try_variant = [&](const std::string& v) -> std::optional<size_t> {
        size_t pos = 0;
        while ((pos = haystack_lower.find(v, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !word_char(haystack_lower[pos - 1]);
            size_t end = pos + v.size();
            bool right_ok = end >= haystack_lower.size() || !word_char(haystack_lower[end]);
            if (left_ok && right_ok) return pos;
            ++pos;
        }
        return std::nullopt;
    };
    std::optional<size_t> best = try_variant(needle);
    if (needle.find('_') != std::string::npos) {
        std::string spaced = needle;
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        auto alt = try_variant(spaced);
        if (alt && (!best || *alt < *best)) best = alt;
    }
    return best;
}

// Fenced ```json blocks, the whole text, and the first balanced {...} object,
// parsed leniently in that order.
inline std::vector<nlohmann::ordered_json> json_candidates(const std::string& text) {
    std::vector<nlohmann::ordered_json> out;
    auto try_parse = [&](std::string_view chunk) {
        auto j = nlohmann::ordered_json::parse(chunk, nullptr, false);
        if (!j.is_discarded() && j.is_object()) out.push_back(std::move(j));
    };
    size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string::npos) {
        size_t content = text.find('\n', pos + 3);
        if (content == std::string::npos) break;
        size_t close = text.find("```", content);
        if (close == std::string::npos) break;
        try_parse(std::string_view(text).substr(content + 1, close - content - 1));
        pos = close + 3;
    }
    try_parse(text);
    size_t open = text.find('{');
    if (open != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        for (size_t i = open; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    try_parse(std::string_view(text).substr(open, i - open + 1));
                    break;
                }
            }
        }
    }
    return out;
}

inline std::optional<nlohmann::ordered_json> json_with_key(const std::string& text, const std::string& key) {
    for (auto& cand : json_candidates(text))
        if (cand.contains(key)) return cand;
    return std::nullopt;
}

inline void warn(std::vector<std::string>* warnings, std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
}

// splits on a word-bounded keyword (case-insensitive) surrounded by spaces
inline std::vector<std::string> split_keyword(const std::string& text, const std::string& keyword) {
    std::vector<std::string> parts;
    std::string lower = to_lower(text);
    size_t start = 0, pos = 0;
    while ((pos = lower.find(keyword, pos)) != std::string::npos) {
        bool left_ok = pos > 0 && std::isspace(static_cast<unsigned char>(lower[pos - 1]));
        size_t end = pos + keyword.size();
        bool right_ok = end < lower.size() && std::isspace(static_cast<unsigned char>(lower[end]));
        if (left_ok && right_ok) {
            parts.push_back(text.substr(start, pos - start));
            start = end;
            pos = end;
        } else {
            ++pos;
        }
    }
    parts.push_back(text.substr(start));
    return parts;
}

inline std::string strip_literal(std::string token) {
    token = trim(token);
    while (!token.empty() && (token.back() == '.' || token.back() == ',' || token.back() == ';')) {
        token.pop_back();
        token = trim(token);
    }
    if (token.size() >= 2 && ((token.front() == '"' && token.back() == '"') ||
                              (token.front() == '\'' && token.back() == '\'')))
        token = trim(token.substr(1, token.size() - 2));
    return token;
}

} // namespace detail

// ---------------------------------------------------------------------------
// level 1: rankings

// Primary path is a fenced JSON {"ranking": [...]}; the fallback orders
// schema variables by first mention in the text. Unknown names are dropped
// with a warning; duplicates keep their first occurrence.
inline Ranking parse_ranking(const std::string& text, const Schema& schema,
                             std::vector<std::string>* warnings = nullptr) {
    Ranking ranking;
    std::set<std::string> seen;
    if (auto doc = detail::json_with_key(text, "ranking")) {
        const auto& arr = (*doc)["ranking"];
        if (arr.is_array()) {
            for (const auto& item : arr) {
                if (!item.is_string()) continue;
                std::string name = normalize_name(item.get<std::string>());
                if (schema.index_of(name) < 0) {
                    detail::warn(warnings, "ranking names unknown variable '" + name + "'");
                    continue;
                }
                if (seen.insert(name).second) ranking.vars.push_back(name);
            }
        }
        if (!ranking.vars.empty()) return ranking;
    }

    // fallback: first-mention order over the raw text
    std::string lower = to_lower(text);
    std::vector<std::pair<size_t, std::string>> mentions;
    for (const auto& var : schema.variables)
        if (auto pos = detail::find_mention(lower, var.name)) mentions.emplace_back(*pos, var.name);
    std::sort(mentions.begin(), mentions.end());
    for (auto& [pos, name] : mentions)
        if (seen.insert(name).second) ranking.vars.push_back(name);

    if (ranking.vars.empty()) throw NoRankingFound("no schema variable found in response");
    return ranking;
}

// ---------------------------------------------------------------------------
// level 2: relations

inline RelationAnswer parse_relations(const std::string& text, const Schema& schema) {
    RelationAnswer answer;
    for (const auto& var : schema.variables) answer.relations[var.name] = RelationToken::Unparsed;

    auto token_of = [](const std::string& lower) -> std::optional<RelationToken> {
        bool pos = lower.find("positiv") != std::string::npos;
        bool neg = lower.find("negativ") != std::string::npos;
        bool neu = lower.find("neutral") != std::string::npos;
        if (pos + neg + neu != 1) return std::nullopt; // ambiguous or absent
        if (pos) return RelationToken::Positive;
        if (neg) return RelationToken::Negative;
        return RelationToken::Neutral;
    };

    if (auto doc = detail::json_with_key(text, "relations")) {
        const auto& obj = (*doc)["relations"];
        if (obj.is_object()) {
            for (const auto& [key, val] : obj.items()) {
                std::string name = normalize_name(key);
                if (schema.index_of(name) < 0 || !val.is_string()) continue;
                if (auto tok = token_of(to_lower(val.get<std::string>())))
                    if (answer.relations[name] == RelationToken::Unparsed) answer.relations[name] = *tok;
            }
        }
    }

    for (const auto& line : split_lines(text)) {
        std::string lower = to_lower(line);
        auto tok = token_of(lower);
        if (!tok) continue;
        for (const auto& var : schema.variables) {
            if (answer.relations[var.name] != RelationToken::Unparsed) continue;
            if (detail::find_mention(lower, var.name)) answer.relations[var.name] = *tok;
        }
    }
    return answer;
}

// ---------------------------------------------------------------------------
// level 3: values

namespace detail {

inline std::optional<double> first_number_after(const std::string& text, size_t from) {
    for (size_t i = from; i < text.size(); ++i) {
        char c = text[i];
        bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                      ((c == '-' || c == '+' || c == '.') && i + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[i + 1])));
        if (!starts) continue;
        const char* begin = text.c_str() + i;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end != begin) return v;
    }
    return std::nullopt;
}

} // namespace detail

inline ValueAnswer parse_values(const std::string& text, const Schema& schema) {
    ValueAnswer answer;
    for (const auto& var : schema.variables) answer.values[var.name] = ParsedValue::unparsed();

    auto assign = [&](const VariableSpec& var, const nlohmann::ordered_json& val) {
        if (!answer.values[var.name].is_unparsed()) return;
        if (var.kind == VarKind::Numeric) {
            if (val.is_number()) {
                double v = val.get<double>();
                if (std::isfinite(v)) answer.values[var.name] = ParsedValue::number(v);
            } else if (val.is_string()) {
                double v;
                if (parse_double(val.get<std::string>(), v) && std::isfinite(v))
                    answer.values[var.name] = ParsedValue::number(v);
            }
        } else if (val.is_string()) {
            std::string cat = normalize_name(val.get<std::string>());
            if (std::find(var.categories.begin(), var.categories.end(), cat) != var.categories.end())
                answer.values[var.name] = ParsedValue::category(cat);
        }
    };

    if (auto doc = detail::json_with_key(text, "values")) {
        const auto& obj = (*doc)["values"];
        if (obj.is_object()) {
            for (const auto& [key, val] : obj.items()) {
                int idx = schema.index_of(normalize_name(key));
                if (idx >= 0) assign(schema.variables[static_cast<size_t>(idx)], val);
            }
        }
    }

    // fallback: per line, "name >= 100", "name: 100", "name above 100", or a
    // declared category mentioned after the name
    for (const auto& line : split_lines(text)) {
        std::string lower = to_lower(line);
        for (const auto& var : schema.variables) {
            if (!answer.values[var.name].is_unparsed()) continue;
            auto at = detail::find_mention(lower, var.name);
            if (!at) continue;
            size_t after = *at + var.name.size();
            if (var.kind == VarKind::Numeric) {
                if (auto num = detail::first_number_after(lower, after))
                    if (std::isfinite(*num)) answer.values[var.name] = ParsedValue::number(*num);
            } else {
                std::optional<size_t> best_pos;
                std::string best_cat;
                for (const auto& cat : var.categories) {
                    auto pos = detail::find_mention(lower.substr(after), cat);
                    if (pos && (!best_pos || *pos < *best_pos)) {
                        best_pos = pos;
                        best_cat = cat;
                    }
                }
                if (best_pos) answer.values[var.name] = ParsedValue::category(best_cat);
            }
        }
    }
    return answer;
}

// ---------------------------------------------------------------------------
// rule sets

namespace detail {

inline std::optional<CondOp> op_from_string(const std::string& s) {
    if (s == "<") return CondOp::Lt;
    if (s == "<=") return CondOp::Le;
    if (s == ">") return CondOp::Gt;
    if (s == ">=") return CondOp::Ge;
    if (s == "==" || s == "=") return CondOp::Eq;
    if (s == "!=") return CondOp::Ne;
    if (to_lower(s) == "in") return CondOp::In;
    return std::nullopt;
}

inline std::optional<Condition> make_condition(const Schema& schema, const std::string& var_raw, CondOp op,
                                               const std::vector<std::string>& literals, bool literal_numeric,
                                               double number, std::vector<std::string>* warnings) {
    std::string var = normalize_name(var_raw);
    int idx = schema.index_of(var);
    if (idx < 0) {
        warn(warnings, "condition references unknown variable '" + var + "'");
        return std::nullopt;
    }
    const auto& spec = schema.variables[static_cast<size_t>(idx)];
    Condition cond;
    cond.var = var;
    cond.op = op;
    if (spec.kind == VarKind::Numeric) {
        if (op == CondOp::In) {
            warn(warnings, "'in' condition on numeric variable '" + var + "' dropped");
            return std::nullopt;
        }
        double value = number;
        if (!literal_numeric) {
            if (literals.size() != 1 || !parse_double(literals[0], value)) {
                warn(warnings, "non-numeric literal for numeric variable '" + var + "' dropped");
                return std::nullopt;
            }
        }
        cond.numeric = true;
        cond.number = value;
        return cond;
    }
    if (op != CondOp::Eq && op != CondOp::Ne && op != CondOp::In) {
        warn(warnings, "ordering comparison on categorical variable '" + var + "' dropped");
        return std::nullopt;
    }
    if (literals.empty()) {
        warn(warnings, "empty literal list for '" + var + "' dropped");
        return std::nullopt;
    }
    cond.numeric = false;
    for (const auto& lit : literals) cond.categories.push_back(normalize_name(strip_literal(lit)));
    if (op != CondOp::In && cond.categories.size() != 1) return std::nullopt;
    return cond;
}

inline std::optional<Condition> parse_condition_text(const std::string& raw, const Schema& schema,
                                                     std::vector<std::string>* warnings) {
    std::string text = trim(raw);
    if (text.empty()) return std::nullopt;

    // membership form: ident in [a, b]
    {
        std::string lower = to_lower(text);
        size_t in_pos = std::string::npos;
        size_t search = 0;
        while ((search = lower.find(" in", search)) != std::string::npos) {
            size_t after = search + 3;
            size_t bracket = lower.find_first_not_of(' ', after);
            if (bracket != std::string::npos && lower[bracket] == '[') {
                in_pos = search;
                break;
            }
            ++search;
        }
        if (in_pos != std::string::npos && text.back() == ']') {
            std::string var_part = text.substr(0, in_pos);
            size_t open = text.find('[', in_pos);
            std::string list = text.substr(open + 1, text.size() - open - 2);
            std::vector<std::string> literals;
            for (const auto& item : split_lines([&] {
                     std::string commas = list;
                     std::replace(commas.begin(), commas.end(), ',', '\n');
                     return commas;
                 }()))
                if (!trim(item).empty()) literals.push_back(strip_literal(item));
            return make_condition(schema, var_part, CondOp::In, literals, false, 0.0, warnings);
        }
    }

    // comparison form: ident op literal  (two-char operators take precedence)
    for (size_t i = 0; i < text.size(); ++i) {
        std::string two = i + 1 < text.size() ? text.substr(i, 2) : "";
        std::string one = text.substr(i, 1);
        std::optional<CondOp> op;
        size_t op_len = 0;
        if (two == "<=" || two == ">=" || two == "==" || two == "!=") {
            op = op_from_string(two);
            op_len = 2;
        } else if (two == "=>") {
            continue; // example-line arrow, not an operator
        } else if (one == "<" || one == ">" || one == "=") {
            op = op_from_string(one);
            op_len = 1;
        }
        if (!op) continue;
        std::string var_part = text.substr(0, i);
        std::string lit = strip_literal(text.substr(i + op_len));
        if (trim(var_part).empty() || lit.empty()) return std::nullopt;
        double number = 0.0;
        bool numeric = parse_double(lit, number);
        return make_condition(schema, var_part, *op, {lit}, numeric, number, warnings);
    }
    return std::nullopt;
}

inline void append_class_rule(RuleSet& rs, const std::string& label, Rule rule) {
    for (auto& cls : rs.classes) {
        if (cls.label == label) {
            cls.rules.push_back(std::move(rule));
            return;
        }
    }
    rs.classes.push_back({label, {std::move(rule)}});
}

} // namespace detail

// Parses per-class conjunctive rules from either the fenced-JSON encoding
// {"rules":{class:[[{var,op,value},...],...]}} or the textual grammar
//   label: cond AND cond OR cond ...
// Unknown variables and type-mismatched literals drop their condition; rules
// longer than max_conditions are truncated to the first max_conditions.
inline RuleSet parse_rule_set(const std::string& text, const Schema& schema, int max_conditions,
                              std::vector<std::string>* warnings = nullptr) {
    if (max_conditions < 1) throw ConfigError("max_conditions must be >= 1");
    RuleSet rs;

    auto push_rule = [&](const std::string& label, Rule rule) {
        if (rule.empty()) return;
        if (static_cast<int>(rule.size()) > max_conditions) {
            detail::warn(warnings, "rule for class '" + label + "' truncated to " +
                                       std::to_string(max_conditions) + " conditions");
            rule.resize(static_cast<size_t>(max_conditions));
        }
        detail::append_class_rule(rs, label, std::move(rule));
    };

    if (auto doc = detail::json_with_key(text, "rules")) {
        const auto& obj = (*doc)["rules"];
        if (obj.is_object()) {
            for (const auto& [class_label, rules_json] : obj.items()) {
                std::string label = normalize_name(class_label);
                if (label.empty() || !rules_json.is_array()) continue;
                for (const auto& rule_json : rules_json) {
                    std::vector<nlohmann::ordered_json> cond_objs;
                    if (rule_json.is_object()) cond_objs.push_back(rule_json);
                    else if (rule_json.is_array())
                        for (const auto& c : rule_json) cond_objs.push_back(c);
                    Rule rule;
                    for (const auto& cj : cond_objs) {
                        if (!cj.is_object() || !cj.contains("var") || !cj.contains("op") || !cj.contains("value"))
                            continue;
                        auto op = detail::op_from_string(cj["op"].is_string() ? cj["op"].get<std::string>() : "");
                        if (!op) continue;
                        std::vector<std::string> literals;
                        bool numeric = false;
                        double number = 0.0;
                        const auto& value = cj["value"];
                        if (value.is_number()) {
                            numeric = true;
                            number = value.get<double>();
                            literals.push_back(format_exact(number));
                        } else if (value.is_string()) {
                            literals.push_back(value.get<std::string>());
                        } else if (value.is_array()) {
                            for (const auto& item : value) {
                                if (item.is_string()) literals.push_back(item.get<std::string>());
                                else if (item.is_number()) literals.push_back(format_exact(item.get<double>()));
                            }
                        }
                        auto cond = detail::make_condition(schema, cj["var"].is_string()
                                                                      ? cj["var"].get<std::string>()
                                                                      : std::string(),
                                                           *op, literals, numeric, number, warnings);
                        if (cond) rule.push_back(std::move(*cond));
                    }
                    push_rule(label, std::move(rule));
                }
            }
        }
        if (!rs.empty()) return rs;
    }

    for (const auto& line : split_lines(text)) {
        size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string label = normalize_name(line.substr(0, colon));
        if (label.empty()) continue;
        std::string rest = line.substr(colon + 1);
        for (const auto& rule_text : detail::split_keyword(rest, "or")) {
            Rule rule;
            for (const auto& cond_text : detail::split_keyword(rule_text, "and")) {
                auto cond = detail::parse_condition_text(cond_text, schema, warnings);
                if (cond) rule.push_back(std::move(*cond));
            }
            push_rule(label, std::move(rule));
        }
    }

    if (rs.empty()) throw NoRulesFound("no class block with a valid condition");
    return rs;
}

// Canonical textual form: one line per class, rules joined by OR, conditions
// by AND. Numeric literals use shortest round-trip formatting, so printing
// and re-parsing reproduces the rule set exactly.
inline std::string print_rule_set(const RuleSet& rs) {
    std::string out;
    for (const auto& cls : rs.classes) {
        if (cls.rules.empty()) continue;
        out += cls.label;
        out += ": ";
        for (size_t r = 0; r < cls.rules.size(); ++r) {
            if (r > 0) out += " OR ";
            const auto& rule = cls.rules[r];
            for (size_t c = 0; c < rule.size(); ++c) {
                if (c > 0) out += " AND ";
                const auto& cond = rule[c];
                out += cond.var;
                out.push_back(' ');
                if (cond.op == CondOp::In) {
                    out += "in [";
                    for (size_t i = 0; i < cond.categories.size(); ++i) {
                        if (i > 0) out += ", ";
                        out += cond.categories[i];
                    }
                    out.push_back(']');
                } else {
                    out += op_symbol(cond.op);
                    out.push_back(' ');
                    out += cond.numeric ? format_exact(cond.number) : cond.categories.front();
                }
            }
        }
        out.push_back('\n');
    }
    return out;
}

} // namespace featdiag
