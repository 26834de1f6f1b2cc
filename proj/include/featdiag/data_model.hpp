#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdiag/common.hpp"
#include "featdiag/errors.hpp"

namespace featdiag {

enum class VarKind { Numeric, Categorical };

// A cell value: a number, a category label, or explicitly missing.
struct Value {
    enum class Kind { Number, Category, Missing } kind = Kind::Missing;
    double num = 0.0;
    std::string cat;

    static Value number(double v) { return {Kind::Number, v, {}}; }
    static Value category(std::string c) { return {Kind::Category, 0.0, std::move(c)}; }
    static Value missing() { return {}; }

    bool is_number() const { return kind == Kind::Number; }
    bool is_category() const { return kind == Kind::Category; }
    bool is_missing() const { return kind == Kind::Missing; }

    friend bool operator==(const Value& a, const Value& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
            case Kind::Number: return a.num == b.num;
            case Kind::Category: return a.cat == b.cat;
            case Kind::Missing: return true;
        }
        return false;
    }
};

struct VariableSpec {
    std::string name; // normalized
    VarKind kind = VarKind::Numeric;
    std::string description;
    std::vector<std::string> categories;     // categorical only, normalized
    double observed_min = std::numeric_limits<double>::quiet_NaN();
    double observed_max = std::numeric_limits<double>::quiet_NaN();

    bool has_range() const { return !std::isnan(observed_min) && !std::isnan(observed_max); }
};

struct TargetSpec {
    std::string name;           // normalized
    std::string positive_label; // normalized
};

struct Schema {
    std::string task_description;
    std::vector<VariableSpec> variables;
    TargetSpec target;

    int index_of(std::string_view normalized) const {
        for (size_t i = 0; i < variables.size(); ++i)
            if (variables[i].name == normalized) return static_cast<int>(i);
        return -1;
    }
};

// Values aligned positionally with schema.variables.
struct Sample {
    std::vector<Value> values;

    friend bool operator==(const Sample& a, const Sample& b) { return a.values == b.values; }
};

struct Dataset {
    Schema schema;
    std::vector<Sample> rows;
    std::vector<int> y;               // 1 = positive_label, 0 = the other observed label
    std::vector<std::string> labels;  // original (normalized) label per row

    size_t size() const { return rows.size(); }
};

// ---------------------------------------------------------------------------
// normalization

// Min-max normalization, clamped to [0,1]; degenerate ranges map to 0.5.
inline double normalize(double value, double lo, double hi) {
    if (hi <= lo) return 0.5;
    double n = (value - lo) / (hi - lo);
    if (n < 0.0) return 0.0;
    if (n > 1.0) return 1.0;
    return n;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline bool is_missing_token(std::string_view raw) {
    std::string t = to_lower(trim(raw));
    return t.empty() || t == "?" || t == "na" || t == "n/a" || t == "nan" || t == "null";
}

inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"': quoted = true; any = true; break;
            case ',':
                row.push_back(field);
                field.clear();
                any = true;
                break;
            case '\r': break;
            case '\n':
                if (any || !field.empty() || !row.empty()) {
                    row.push_back(field);
                    rows.push_back(std::move(row));
                }
                row = {};
                field.clear();
                any = false;
                break;
            default: field.push_back(c); any = true;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string csv_escape(std::string_view field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

} // namespace detail

// ---------------------------------------------------------------------------
// schema loading

inline Schema parse_schema(const nlohmann::json& doc) {
    Schema schema;
    schema.task_description = doc.value("task_description", std::string());
    if (!doc.contains("target") || !doc.contains("variables"))
        throw SchemaMismatch("schema document needs 'target' and 'variables'");
    schema.target.name = normalize_name(doc["target"].value("name", std::string()));
    schema.target.positive_label = normalize_name(doc["target"].value("positive_label", std::string()));
    if (schema.target.name.empty() || schema.target.positive_label.empty())
        throw SchemaMismatch("target needs 'name' and 'positive_label'");

    std::set<std::string> seen;
    for (const auto& v : doc["variables"]) {
        VariableSpec spec;
        spec.name = normalize_name(v.value("name", std::string()));
        if (spec.name.empty()) throw SchemaMismatch("variable with empty name");
        if (!seen.insert(spec.name).second)
            throw SchemaMismatch("duplicate variable name after normalization: " + spec.name);
        std::string kind = to_lower(v.value("kind", std::string()));
        if (kind == "numeric") spec.kind = VarKind::Numeric;
        else if (kind == "categorical") spec.kind = VarKind::Categorical;
        else throw SchemaMismatch("variable '" + spec.name + "' has unknown kind: " + kind);
        spec.description = v.value("description", std::string());
        if (spec.kind == VarKind::Categorical) {
            for (const auto& c : v.value("categories", nlohmann::json::array()))
                spec.categories.push_back(normalize_name(c.get<std::string>()));
            if (spec.categories.empty())
                throw SchemaMismatch("categorical variable '" + spec.name + "' needs categories");
        }
        schema.variables.push_back(std::move(spec));
    }
    if (schema.variables.empty()) throw SchemaMismatch("schema declares no variables");
    if (schema.index_of(schema.target.name) >= 0)
        throw SchemaMismatch("target column duplicates a variable name");
    return schema;
}

inline Schema load_schema(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("schema file " + path + " is not valid JSON: " + e.what());
    }
    return parse_schema(doc);
}

// ---------------------------------------------------------------------------
// dataset loading

inline void compute_observed_ranges(Dataset& ds) {
    for (size_t j = 0; j < ds.schema.variables.size(); ++j) {
        auto& var = ds.schema.variables[j];
        if (var.kind != VarKind::Numeric) continue;
        double lo = std::numeric_limits<double>::quiet_NaN();
        double hi = lo;
        for (const auto& row : ds.rows) {
            const Value& v = row.values[j];
            if (!v.is_number()) continue;
            if (std::isnan(lo) || v.num < lo) lo = v.num;
            if (std::isnan(hi) || v.num > hi) hi = v.num;
        }
        var.observed_min = lo;
        var.observed_max = hi;
    }
}

// Builds a dataset from parsed CSV cells (header row first). Target labels are
// normalized; exactly one of at most two observed labels must be the declared
// positive label, which encodes to 1.
inline Dataset assemble_dataset(Schema schema, const std::vector<std::vector<std::string>>& cells) {
    if (cells.empty()) throw EmptyDataset("CSV has no header row");
    const auto& header = cells.front();

    std::vector<int> col_to_var(header.size(), -1);
    int target_col = -1;
    std::set<std::string> seen;
    for (size_t c = 0; c < header.size(); ++c) {
        std::string name = normalize_name(header[c]);
        if (!seen.insert(name).second) throw SchemaMismatch("duplicate CSV column: " + name);
        if (name == schema.target.name) {
            target_col = static_cast<int>(c);
            continue;
        }
        int vi = schema.index_of(name);
        if (vi < 0) throw SchemaMismatch("CSV column '" + name + "' is not in the schema");
        col_to_var[c] = vi;
    }
    if (target_col < 0) throw SchemaMismatch("CSV is missing target column '" + schema.target.name + "'");
    for (const auto& var : schema.variables)
        if (seen.find(var.name) == seen.end())
            throw SchemaMismatch("schema variable '" + var.name + "' is missing from the CSV");

    Dataset ds;
    ds.schema = std::move(schema);
    std::set<std::string> label_set;
    for (size_t r = 1; r < cells.size(); ++r) {
        const auto& rec = cells[r];
        if (rec.size() != header.size())
            throw SchemaMismatch("CSV row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                                 " fields, expected " + std::to_string(header.size()));
        if (detail::is_missing_token(rec[static_cast<size_t>(target_col)])) continue; // drop unlabeled rows
        std::string label = normalize_name(rec[static_cast<size_t>(target_col)]);

        Sample sample;
        sample.values.resize(ds.schema.variables.size());
        for (size_t c = 0; c < rec.size(); ++c) {
            int vi = col_to_var[c];
            if (vi < 0) continue;
            const auto& var = ds.schema.variables[static_cast<size_t>(vi)];
            const std::string& raw = rec[c];
            if (detail::is_missing_token(raw)) {
                sample.values[static_cast<size_t>(vi)] = Value::missing();
                continue;
            }
            if (var.kind == VarKind::Numeric) {
                double num;
                if (!parse_double(raw, num))
                    throw SchemaMismatch("non-numeric value '" + raw + "' in numeric column '" + var.name + "'");
                sample.values[static_cast<size_t>(vi)] = Value::number(num);
            } else {
                std::string cat = normalize_name(raw);
                if (std::find(var.categories.begin(), var.categories.end(), cat) == var.categories.end())
                    throw SchemaMismatch("undeclared category '" + cat + "' in column '" + var.name + "'");
                sample.values[static_cast<size_t>(vi)] = Value::category(std::move(cat));
            }
        }
        ds.rows.push_back(std::move(sample));
        ds.labels.push_back(label);
        label_set.insert(label);
    }
    if (ds.rows.empty()) throw EmptyDataset("no labeled rows");
    if (label_set.size() > 2)
        throw NonBinaryTarget("target has " + std::to_string(label_set.size()) + " distinct labels");
    if (label_set.size() == 2 && label_set.count(ds.schema.target.positive_label) == 0)
        throw SchemaMismatch("positive label '" + ds.schema.target.positive_label + "' never observed");

    ds.y.reserve(ds.labels.size());
    for (const auto& l : ds.labels) ds.y.push_back(l == ds.schema.target.positive_label ? 1 : 0);
    compute_observed_ranges(ds);
    return ds;
}

inline Dataset load_dataset(const std::string& csv_path, const std::string& schema_path) {
    Schema schema = load_schema(schema_path);
    return assemble_dataset(std::move(schema), detail::parse_csv(detail::read_file(csv_path)));
}

inline std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    for (const auto& var : ds.schema.variables) {
        out += detail::csv_escape(var.name);
        out.push_back(',');
    }
    out += detail::csv_escape(ds.schema.target.name);
    out.push_back('\n');
    for (size_t r = 0; r < ds.rows.size(); ++r) {
        for (size_t j = 0; j < ds.schema.variables.size(); ++j) {
            const Value& v = ds.rows[r].values[j];
            if (v.is_number()) out += detail::csv_escape(format_exact(v.num));
            else if (v.is_category()) out += detail::csv_escape(v.cat);
            // missing renders as an empty field
            out.push_back(',');
        }
        out += detail::csv_escape(ds.labels[r]);
        out.push_back('\n');
    }
    return out;
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    detail::write_file(path, dataset_to_csv(ds));
}

// ---------------------------------------------------------------------------
// one-hot encoding

struct EncodedColumn {
    std::string variable;
    std::string category; // empty for numeric pass-through
    std::vector<double> values;
};

struct EncodedMatrix {
    std::vector<EncodedColumn> columns;
};

// Categorical variables expand to one indicator column per declared category
// (missing rows are all-zero); numeric columns pass through with missing
// imputed by the column mean over observed entries.
inline EncodedMatrix one_hot(const Dataset& ds) {
    EncodedMatrix mat;
    const size_t n = ds.rows.size();
    for (size_t j = 0; j < ds.schema.variables.size(); ++j) {
        const auto& var = ds.schema.variables[j];
        if (var.kind == VarKind::Numeric) {
            EncodedColumn col{var.name, "", std::vector<double>(n, 0.0)};
            double sum = 0.0;
            size_t count = 0;
            for (size_t r = 0; r < n; ++r) {
                const Value& v = ds.rows[r].values[j];
                if (v.is_number()) {
                    sum += v.num;
                    ++count;
                }
            }
            const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
            for (size_t r = 0; r < n; ++r) {
                const Value& v = ds.rows[r].values[j];
                col.values[r] = v.is_number() ? v.num : mean;
            }
            mat.columns.push_back(std::move(col));
        } else {
            for (const auto& cat : var.categories) {
                EncodedColumn col{var.name, cat, std::vector<double>(n, 0.0)};
                for (size_t r = 0; r < n; ++r) {
                    const Value& v = ds.rows[r].values[j];
                    if (v.is_category() && v.cat == cat) col.values[r] = 1.0;
                }
                mat.columns.push_back(std::move(col));
            }
        }
    }
    return mat;
}

// ---------------------------------------------------------------------------
// splitting

namespace detail {

inline Dataset subset(const Dataset& ds, const std::vector<size_t>& idx) {
    Dataset out;
    out.schema = ds.schema;
    out.rows.reserve(idx.size());
    out.y.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (size_t i : idx) {
        out.rows.push_back(ds.rows[i]);
        out.y.push_back(ds.y[i]);
        out.labels.push_back(ds.labels[i]);
    }
    compute_observed_ranges(out);
    return out;
}

} // namespace detail

// Deterministic seeded split. Train receives n_train rows and, when both
// classes exist, at least one row of each (a deterministic swap repairs
// single-class draws).
inline std::pair<Dataset, Dataset> split(const Dataset& ds, uint64_t seed, size_t n_train) {
    if (n_train < 2 || n_train >= ds.rows.size())
        throw InsufficientRows("need 2 <= n_train < rows, got n_train=" + std::to_string(n_train) +
                               " with " + std::to_string(ds.rows.size()) + " rows");
    Rng rng(seed);
    std::vector<size_t> order = rng.permutation(ds.rows.size());
    std::vector<size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    auto count_class = [&](const std::vector<size_t>& idx, int cls) {
        size_t c = 0;
        for (size_t i : idx)
            if (ds.y[i] == cls) ++c;
        return c;
    };
    for (int cls : {0, 1}) {
        if (count_class(train_idx, cls) > 0) continue;
        // first test row of the missing class swaps with the first train row
        // of the over-represented class
        auto test_it = std::find_if(test_idx.begin(), test_idx.end(), [&](size_t i) { return ds.y[i] == cls; });
        if (test_it == test_idx.end()) continue; // class absent from the dataset entirely
        auto train_it = std::find_if(train_idx.begin(), train_idx.end(), [&](size_t i) { return ds.y[i] != cls; });
        if (train_it != train_idx.end()) std::swap(*test_it, *train_it);
    }
    return {detail::subset(ds, train_idx), detail::subset(ds, test_idx)};
}

} // namespace featdiag
