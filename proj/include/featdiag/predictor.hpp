#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "featdiag/common.hpp"
#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"
#include "featdiag/response_parser.hpp"

namespace featdiag {

// Condition cap for generated rules: ceil(max(n_golden, 0.5 * n_vars)).
inline int max_conditions(int n_vars, int n_golden) {
    return std::max(n_golden, (n_vars + 1) / 2);
}

// ---------------------------------------------------------------------------
// featurization

// One binary column per rule, tagged with (class label, rule index).
struct FeatureColumn {
    std::string class_label;
    int rule_index = 0;
    std::vector<uint8_t> values;
};

struct BinaryFeatureMatrix {
    size_t n_rows = 0;
    std::vector<FeatureColumn> columns;
};

namespace detail {

// Missing values fail every condition; numeric comparisons act on raw values.
inline bool condition_satisfied(const Condition& cond, const Sample& sample, const Schema& schema) {
    int idx = schema.index_of(cond.var);
    if (idx < 0) return false;
    const Value& v = sample.values[static_cast<size_t>(idx)];
    if (v.is_missing()) return false;
    if (cond.numeric) {
        if (!v.is_number()) return false;
        switch (cond.op) {
            case CondOp::Lt: return v.num < cond.number;
            case CondOp::Le: return v.num <= cond.number;
            case CondOp::Gt: return v.num > cond.number;
            case CondOp::Ge: return v.num >= cond.number;
            case CondOp::Eq: return v.num == cond.number;
            case CondOp::Ne: return v.num != cond.number;
            case CondOp::In: return false;
        }
        return false;
    }
    if (!v.is_category()) return false;
    const bool member = std::find(cond.categories.begin(), cond.categories.end(), v.cat) !=
                        cond.categories.end();
    switch (cond.op) {
        case CondOp::Eq:
        case CondOp::In: return member;
        case CondOp::Ne: return !member;
        default: return false;
    }
}

} // namespace detail

inline BinaryFeatureMatrix featurize(const RuleSet& rule_set, const Dataset& ds) {
    BinaryFeatureMatrix mat;
    mat.n_rows = ds.rows.size();
    for (const auto& cls : rule_set.classes) {
        for (size_t r = 0; r < cls.rules.size(); ++r) {
            FeatureColumn col{cls.label, static_cast<int>(r), std::vector<uint8_t>(mat.n_rows, 0)};
            for (size_t i = 0; i < mat.n_rows; ++i) {
                bool all = true;
                for (const auto& cond : cls.rules[r]) {
                    if (!detail::condition_satisfied(cond, ds.rows[i], ds.schema)) {
                        all = false;
                        break;
                    }
                }
                col.values[i] = all ? 1 : 0;
            }
            mat.columns.push_back(std::move(col));
        }
    }
    return mat;
}

// ---------------------------------------------------------------------------
// logistic regression

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double strength = 1.0; // inverse regularization, as searched by the grid
};

struct Objective {
    double loss = 0.0;
    std::vector<double> grad_weights;
    double grad_intercept = 0.0;
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// numerically stable log(1 + exp(z)) - y * z
inline double logloss_term(double z, int y) {
    double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - static_cast<double>(y) * z;
}

inline std::vector<double> margins(const BinaryFeatureMatrix& X, const std::vector<double>& w, double b) {
    std::vector<double> z(X.n_rows, b);
    for (size_t j = 0; j < X.columns.size(); ++j) {
        const double wj = w[j];
        if (wj == 0.0) continue;
        const auto& col = X.columns[j].values;
        for (size_t i = 0; i < col.size(); ++i)
            if (col[i]) z[i] += wj;
    }
    return z;
}

} // namespace detail

// Mean logistic loss plus (lambda/2)||w||^2; the intercept is unregularized.
inline Objective logreg_objective(const BinaryFeatureMatrix& X, const std::vector<int>& y,
                                  const std::vector<double>& w, double b, double lambda) {
    const size_t n = X.n_rows;
    Objective obj;
    obj.grad_weights.assign(X.columns.size(), 0.0);
    auto z = detail::margins(X, w, b);
    for (size_t i = 0; i < n; ++i) {
        obj.loss += detail::logloss_term(z[i], y[i]);
        double residual = detail::sigmoid(z[i]) - static_cast<double>(y[i]);
        obj.grad_intercept += residual;
        for (size_t j = 0; j < X.columns.size(); ++j)
            if (X.columns[j].values[i]) obj.grad_weights[j] += residual;
    }
    const double dn = static_cast<double>(n);
    obj.loss /= dn;
    obj.grad_intercept /= dn;
    for (size_t j = 0; j < w.size(); ++j) {
        obj.grad_weights[j] = obj.grad_weights[j] / dn + lambda * w[j];
        obj.loss += 0.5 * lambda * w[j] * w[j];
    }
    return obj;
}

namespace detail {

// Full-batch gradient descent with a backtracking step: at most 2000
// iterations, stopping when the gradient max-norm drops below 1e-6.
inline LinearModel fit_logreg(const BinaryFeatureMatrix& X, const std::vector<int>& y, double strength) {
    const double lambda = 1.0 / (strength * static_cast<double>(std::max<size_t>(X.n_rows, 1)));
    LinearModel model;
    model.strength = strength;
    model.weights.assign(X.columns.size(), 0.0);
    model.intercept = 0.0;

    double step = 1.0;
    Objective cur = logreg_objective(X, y, model.weights, model.intercept, lambda);
    for (int iter = 0; iter < 2000; ++iter) {
        double gmax = std::fabs(cur.grad_intercept);
        for (double g : cur.grad_weights) gmax = std::max(gmax, std::fabs(g));
        if (gmax < 1e-6) break;

        bool advanced = false;
        for (int halving = 0; halving < 60; ++halving) {
            std::vector<double> w_next(model.weights.size());
            for (size_t j = 0; j < w_next.size(); ++j)
                w_next[j] = model.weights[j] - step * cur.grad_weights[j];
            double b_next = model.intercept - step * cur.grad_intercept;
            Objective next = logreg_objective(X, y, w_next, b_next, lambda);
            if (next.loss < cur.loss) {
                model.weights = std::move(w_next);
                model.intercept = b_next;
                cur = std::move(next);
                step = std::min(step * 1.25, 1e4);
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if (!advanced) break; // step underflow: at numerical optimum
    }
    return model;
}

inline std::vector<int> stratified_fold_ids(const std::vector<int>& y, int k, uint64_t seed) {
    std::vector<int> fold(y.size(), 0);
    Rng rng(seed);
    for (int cls : {1, 0}) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < y.size(); ++i)
            if (y[i] == cls) idx.push_back(i);
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = static_cast<int>(i % static_cast<size_t>(k));
    }
    return fold;
}

inline BinaryFeatureMatrix select_rows(const BinaryFeatureMatrix& X, const std::vector<size_t>& rows) {
    BinaryFeatureMatrix out;
    out.n_rows = rows.size();
    out.columns.reserve(X.columns.size());
    for (const auto& col : X.columns) {
        FeatureColumn c{col.class_label, col.rule_index, std::vector<uint8_t>(rows.size())};
        for (size_t i = 0; i < rows.size(); ++i) c.values[i] = col.values[rows[i]];
        out.columns.push_back(std::move(c));
    }
    return out;
}

} // namespace detail

inline std::vector<double> predict_proba(const LinearModel& model, const BinaryFeatureMatrix& X) {
    auto z = detail::margins(X, model.weights, model.intercept);
    std::vector<double> p(z.size());
    for (size_t i = 0; i < z.size(); ++i) p[i] = detail::sigmoid(z[i]);
    return p;
}

// Rank-based (Mann-Whitney) AUROC; tied scores credit half a concordant pair.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& y) {
    if (scores.size() != y.size()) throw LengthMismatch("auroc inputs differ in length");
    size_t n_pos = 0, n_neg = 0;
    for (int v : y) (v ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) throw SingleClass("auroc needs both classes");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t t = i; t <= j; ++t)
            if (y[order[t]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Grid search over inverse-regularization strengths {0.01, 0.1, 1, 10} by
// mean validation AUROC over stratified k folds, k = min(5, minority count);
// with k < 2 the search is skipped and strength 1 is used. The final model is
// refit on all rows with the chosen strength.
inline LinearModel train_logreg(const BinaryFeatureMatrix& X, const std::vector<int>& y, uint64_t seed) {
    if (X.n_rows != y.size()) throw LengthMismatch("feature matrix and target differ in length");
    size_t n_pos = 0, n_neg = 0;
    for (int v : y) (v ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) throw SingleClassTraining("training target has a single class");

    static constexpr double kGrid[] = {0.01, 0.1, 1.0, 10.0};
    const int k = static_cast<int>(std::min<size_t>(5, std::min(n_pos, n_neg)));
    double chosen = 1.0;
    if (k >= 2) {
        auto fold = detail::stratified_fold_ids(y, k, seed);
        double best_score = -1.0;
        for (double strength : kGrid) {
            double sum = 0.0;
            int folds_used = 0;
            for (int f = 0; f < k; ++f) {
                std::vector<size_t> train_rows, val_rows;
                for (size_t i = 0; i < y.size(); ++i) (fold[i] == f ? val_rows : train_rows).push_back(i);
                std::vector<int> y_train, y_val;
                for (size_t i : train_rows) y_train.push_back(y[i]);
                for (size_t i : val_rows) y_val.push_back(y[i]);
                bool train_both = std::count(y_train.begin(), y_train.end(), 1) > 0 &&
                                  std::count(y_train.begin(), y_train.end(), 0) > 0;
                bool val_both = std::count(y_val.begin(), y_val.end(), 1) > 0 &&
                                std::count(y_val.begin(), y_val.end(), 0) > 0;
                if (!train_both || !val_both) continue;
                auto model = detail::fit_logreg(detail::select_rows(X, train_rows), y_train, strength);
                auto p = predict_proba(model, detail::select_rows(X, val_rows));
                sum += auroc(p, y_val);
                ++folds_used;
            }
            if (folds_used == 0) continue;
            double mean_score = sum / folds_used;
            if (mean_score > best_score) {
                best_score = mean_score;
                chosen = strength;
            }
        }
    }
    return detail::fit_logreg(X, y, chosen);
}

// Equal-weight ensemble: the arithmetic mean of per-model positive-class
// probabilities on row-aligned matrices.
inline std::vector<double> ensemble_predict(const std::vector<LinearModel>& models,
                                            const std::vector<BinaryFeatureMatrix>& matrices) {
    if (models.empty()) throw EmptyEnsemble("no models to ensemble");
    if (models.size() != matrices.size())
        throw RowMisalignment("model and matrix counts differ");
    const size_t n = matrices.front().n_rows;
    for (const auto& m : matrices)
        if (m.n_rows != n) throw RowMisalignment("feature matrices are not row-aligned");
    // averaged as base + mean(deltas) so k identical members reproduce the
    // single-model probabilities exactly
    std::vector<double> base = predict_proba(models[0], matrices[0]);
    std::vector<double> delta(n, 0.0);
    for (size_t m = 1; m < models.size(); ++m) {
        auto p = predict_proba(models[m], matrices[m]);
        for (size_t i = 0; i < n; ++i) delta[i] += p[i] - base[i];
    }
    for (size_t i = 0; i < n; ++i) base[i] += delta[i] / static_cast<double>(models.size());
    return base;
}

inline nlohmann::ordered_json model_to_json(const LinearModel& model, const BinaryFeatureMatrix& X) {
    nlohmann::ordered_json doc;
    doc["strength"] = model.strength;
    doc["intercept"] = model.intercept;
    doc["columns"] = nlohmann::ordered_json::array();
    for (size_t j = 0; j < X.columns.size(); ++j)
        doc["columns"].push_back({{"class", X.columns[j].class_label},
                                  {"rule", X.columns[j].rule_index},
                                  {"weight", model.weights[j]}});
    return doc;
}

} // namespace featdiag
