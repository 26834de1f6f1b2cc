#pragma once

#include <string>
#include <utility>
#include <vector>

#include "featdiag/common.hpp"
#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"
#include "featdiag/example_sampler.hpp"

namespace featdiag {

enum class Level { L1, L2, L3, FeatureGen };

enum class DescriptionDetail { NameOnly, Full };

inline std::string level_name(Level l) {
    switch (l) {
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
        case Level::FeatureGen: return "feature_gen";
    }
    return "L1";
}

struct PromptSpec {
    Level level = Level::L1;
    DescriptionDetail detail = DescriptionDetail::Full;
    Schema schema; // possibly corrupted presentation copy
    std::vector<std::pair<Sample, std::string>> examples;
    int max_conditions = 1;     // FeatureGen only
    std::string template_text;  // empty selects the built-in default
};

// ---------------------------------------------------------------------------
// default templates
//
// Templates are plain text with {{task}}, {{variables}}, {{examples}} and
// {{format}} slots ({{max_conditions}} additionally for feature generation).
// Editable copies ship under templates/; the run config can point at a
// directory of replacements.

inline std::string default_template(Level level) {
    switch (level) {
        case Level::L1:
            return "You are an expert data scientist working on a tabular classification task.\n"
                   "\n"
                   "[Task]\n"
                   "{{task}}\n"
                   "\n"
                   "[Variables]\n"
                   "{{variables}}\n"
                   "\n"
                   "[Examples]\n"
                   "{{examples}}\n"
                   "\n"
                   "Considering the information above, rank variables according to their importance to solve"
                   " the task, from most important to least important. Include every variable exactly once.\n"
                   "\n"
                   "{{format}}\n";
        case Level::L2:
            return "You are an expert data scientist working on a tabular classification task.\n"
                   "\n"
                   "[Task]\n"
                   "{{task}}\n"
                   "\n"
                   "[Variables]\n"
                   "{{variables}}\n"
                   "\n"
                   "[Examples]\n"
                   "{{examples}}\n"
                   "\n"
                   "Considering the information above, analyze the causal relationship or tendency between"
                   " each variable and class. For each variable, state whether it is positively correlated,"
                   " negatively correlated, or neutral with respect to the positive class.\n"
                   "\n"
                   "{{format}}\n";
        case Level::L3:
            return "You are an expert data scientist working on a tabular classification task.\n"
                   "\n"
                   "[Task]\n"
                   "{{task}}\n"
                   "\n"
                   "[Variables]\n"
                   "{{variables}}\n"
                   "\n"
                   "[Examples]\n"
                   "{{examples}}\n"
                   "\n"
                   "Considering the information above, fill in the variable conditions for each class to"
                   " solve the task. For each variable, give the boundary value that best separates the"
                   " classes: a number for numeric variables, a category for categorical variables.\n"
                   "\n"
                   "{{format}}\n";
        case Level::FeatureGen:
            return "You are an expert data scientist working on a tabular classification task.\n"
                   "\n"
                   "[Task]\n"
                   "{{task}}\n"
                   "\n"
                   "[Variables]\n"
                   "{{variables}}\n"
                   "\n"
                   "[Examples]\n"
                   "{{examples}}\n"
                   "\n"
                   "Considering the information above, write classification rules for each class. A rule is"
                   " a conjunction of variable conditions (for example: glucose >= 100 AND age >= 40) that"
                   " holds for samples of that class. Use at most {{max_conditions}} conditions per rule.\n"
                   "\n"
                   "{{format}}\n";
    }
    return {};
}

// Identical for every dataset at a given level, so parsers can rely on it.
inline std::string format_instructions(Level level) {
    switch (level) {
        case Level::L1:
            return "Respond with a fenced JSON object in exactly this form:\n"
                   "```json\n"
                   "{\"ranking\": [\"<variable name>\", \"<variable name>\", ...]}\n"
                   "```";
        case Level::L2:
            return "Respond with a fenced JSON object in exactly this form:\n"
                   "```json\n"
                   "{\"relations\": {\"<variable name>\": \"positive\" | \"negative\" | \"neutral\"}}\n"
                   "```";
        case Level::L3:
            return "Respond with a fenced JSON object in exactly this form:\n"
                   "```json\n"
                   "{\"values\": {\"<variable name>\": <number or category>}}\n"
                   "```";
        case Level::FeatureGen:
            return "Respond with one line per class, in exactly this form:\n"
                   "<class label>: <variable> <operator> <value> AND <variable> <operator> <value>\n"
                   "Operators: < <= > >= == != . Join conditions of one rule with AND; join alternative"
                   " rules for the same class with OR. For categorical variables you may also write"
                   " <variable> in [<value>, <value>].";
    }
    return {};
}

// ---------------------------------------------------------------------------
// serialization

// One example line: "name1: v1, name2: v2, ... => label" in schema
// presentation order; numerics use up to 6 significant digits, missing
// values render as "unknown".
inline std::string serialize_example(const Sample& sample, const Schema& schema, const std::string& label) {
    std::string out;
    for (size_t j = 0; j < schema.variables.size(); ++j) {
        if (j > 0) out += ", ";
        out += schema.variables[j].name;
        out += ": ";
        const Value& v = sample.values[j];
        if (v.is_number()) out += format_sig6(v.num);
        else if (v.is_category()) out += v.cat;
        else out += "unknown";
    }
    out += " => ";
    out += label;
    return out;
}

inline std::string variable_block(const Schema& schema, DescriptionDetail detail) {
    std::string out;
    for (size_t j = 0; j < schema.variables.size(); ++j) {
        const auto& var = schema.variables[j];
        if (j > 0) out.push_back('\n');
        out += "- ";
        out += var.name;
        if (detail == DescriptionDetail::Full) {
            if (var.kind == VarKind::Numeric) {
                out += " (numeric)";
            } else {
                out += " (categorical: ";
                for (size_t c = 0; c < var.categories.size(); ++c) {
                    if (c > 0) out += ", ";
                    out += var.categories[c];
                }
                out += ")";
            }
            if (!var.description.empty()) {
                out += ": ";
                out += var.description;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// rendering

inline std::string render_prompt(const PromptSpec& spec) {
    if (trim(spec.schema.task_description).empty())
        throw MissingTaskDescription("schema has no task description");

    std::string text = spec.template_text.empty() ? default_template(spec.level) : spec.template_text;

    std::string examples;
    if (spec.examples.empty()) {
        examples = "(no examples)";
    } else {
        for (size_t i = 0; i < spec.examples.size(); ++i) {
            if (i > 0) examples.push_back('\n');
            examples += serialize_example(spec.examples[i].first, spec.schema, spec.examples[i].second);
        }
    }

    replace_all(text, "{{task}}", spec.schema.task_description);
    replace_all(text, "{{variables}}", variable_block(spec.schema, spec.detail));
    replace_all(text, "{{examples}}", examples);
    replace_all(text, "{{format}}", format_instructions(spec.level));
    replace_all(text, "{{max_conditions}}", std::to_string(spec.max_conditions));
    return text;
}

} // namespace featdiag
