#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpaudit/core/error.hpp"
#include "mpaudit/data/dataset.hpp"
#include "mpaudit/data/ingest.hpp"

namespace mpaudit {

enum class Criterion { gini, entropy };

inline std::string to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

inline Criterion parse_criterion(const std::string& s) {
    if (s == "gini") return Criterion::gini;
    if (s == "entropy") return Criterion::entropy;
    throw config_error("unknown split criterion '" + s + "'");
}

struct TreeParams {
    std::size_t max_depth = 3;
    Criterion criterion = Criterion::gini;
    std::uint64_t seed = 0;
    std::size_t min_samples_split = 2;
    double leaf_penalty_lambda = 0.0;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

struct TreeNode {
    /// Index into DecisionTree::features; -1 marks a leaf.
    int feature = -1;
    /// Threshold features: value <= threshold goes left. Categorical
    /// features: value == threshold (a category code) goes left.
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int parent = -1;
    std::uint8_t label = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Trained binary classifier. Node 0 is the root; features are referenced by
/// name through `features`, so a tree trained on a column subset still scores
/// full-width rows once bound to their schema.
struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::vector<Column> features;
    TreeParams params;

    std::size_t leaf_count() const {
        std::size_t n = 0;
        for (const auto& nd : nodes) n += nd.is_leaf();
        return n;
    }

    std::size_t depth() const {
        std::size_t best = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].is_leaf()) continue;
            std::size_t d = 0;
            for (int p = nodes[i].parent; p >= 0; p = nodes[static_cast<std::size_t>(p)].parent) ++d;
            best = std::max(best, d);
        }
        return best;
    }

    /// Same nodes over the same features; params are not compared.
    bool same_structure(const DecisionTree& o) const { return nodes == o.nodes && features == o.features; }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

inline DecisionTree constant_tree(std::uint8_t label, std::vector<Column> features = {}) {
    DecisionTree t;
    TreeNode leaf;
    leaf.label = label;
    t.nodes.push_back(leaf);
    t.features = std::move(features);
    t.params.max_depth = 1;
    return t;
}

/// Column positions, in a dataset schema, of each feature a tree uses.
using FeatureBinding = std::vector<std::size_t>;

inline FeatureBinding bind(const DecisionTree& tree, const Schema& schema) {
    FeatureBinding b;
    b.reserve(tree.features.size());
    for (const auto& f : tree.features) {
        auto j = schema.find(f.name);
        if (!j) throw data_error("feature mismatch: tree feature '" + f.name + "' not in data");
        const auto& c = schema.columns[*j];
        if (c.kind != f.kind && !(is_threshold_kind(c.kind) && is_threshold_kind(f.kind)))
            throw data_error("feature mismatch: column '" + f.name + "' has kind " +
                             std::string(to_string(c.kind)) + ", tree expects " +
                             std::string(to_string(f.kind)));
        if (f.kind == ColumnKind::categorical && c.categories != f.categories)
            throw data_error("feature mismatch: category dictionary of '" + f.name + "' differs");
        b.push_back(*j);
    }
    return b;
}

inline FeatureBinding identity_binding(const DecisionTree& tree) {
    FeatureBinding b(tree.features.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
    return b;
}

inline std::uint8_t predict(const DecisionTree& tree, std::span<const double> row,
                            const FeatureBinding& binding) {
    std::size_t i = 0;
    for (;;) {
        const auto& nd = tree.nodes[i];
        if (nd.is_leaf()) return nd.label;
        const std::size_t col = binding[static_cast<std::size_t>(nd.feature)];
        if (col >= row.size() || std::isnan(row[col]))
            throw data_error("missing value for feature '" +
                             tree.features[static_cast<std::size_t>(nd.feature)].name + "'");
        const double x = row[col];
        const bool go_left = tree.features[static_cast<std::size_t>(nd.feature)].kind ==
                                     ColumnKind::categorical
                                 ? x == nd.threshold
                                 : x <= nd.threshold;
        i = static_cast<std::size_t>(go_left ? nd.left : nd.right);
    }
}

/// Predicts a row laid out in the tree's own feature order.
inline std::uint8_t predict(const DecisionTree& tree, std::span<const double> x) {
    if (x.size() < tree.features.size()) throw data_error("missing feature value");
    return predict(tree, x, identity_binding(tree));
}

inline std::vector<std::uint8_t> predict_all(const DecisionTree& tree, const Dataset& ds) {
    const auto b = bind(tree, ds.schema());
    std::vector<std::uint8_t> out(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) out[i] = predict(tree, ds.row(i), b);
    return out;
}

inline std::size_t correct_count(const DecisionTree& tree, const Dataset& ds) {
    const auto b = bind(tree, ds.schema());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) correct += predict(tree, ds.row(i), b) == ds.label(i);
    return correct;
}

/// Fraction of rows whose prediction equals the label.
inline double accuracy(const DecisionTree& tree, const Dataset& ds) {
    if (ds.empty()) throw data_error("accuracy on an empty dataset");
    return static_cast<double>(correct_count(tree, ds)) / static_cast<double>(ds.rows());
}

/// Leaf-penalized objective: accuracy minus lambda per leaf.
inline double objective(double acc, std::size_t leaves, double lambda) {
    if (!(lambda >= 0)) throw config_error("lambda must be >= 0");
    return acc - lambda * static_cast<double>(leaves);
}

inline double objective(const DecisionTree& tree, const Dataset& ds, double lambda) {
    return objective(accuracy(tree, ds), tree.leaf_count(), lambda);
}

// ---------------------------------------------------------------------------
// JSON form: a flat node list with parent indices.

inline nlohmann::json params_to_json(const TreeParams& p) {
    return {{"max_depth", p.max_depth},
            {"criterion", to_string(p.criterion)},
            {"seed", p.seed},
            {"min_samples_split", p.min_samples_split},
            {"leaf_penalty_lambda", p.leaf_penalty_lambda}};
}

inline TreeParams params_from_json(const nlohmann::json& j) {
    TreeParams p;
    p.max_depth = j.at("max_depth").get<std::size_t>();
    p.criterion = parse_criterion(j.at("criterion").get<std::string>());
    p.seed = j.at("seed").get<std::uint64_t>();
    p.min_samples_split = j.value("min_samples_split", std::size_t{2});
    p.leaf_penalty_lambda = j.value("leaf_penalty_lambda", 0.0);
    return p;
}

inline nlohmann::json tree_to_json(const DecisionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& nd = t.nodes[i];
        // Internal nodes keep their majority label too.
        nlohmann::json jn{{"id", i}, {"parent", nd.parent}, {"label", nd.label}};
        if (!nd.is_leaf()) {
            jn["feature"] = nd.feature;
            jn["threshold"] = nd.threshold;
            jn["left"] = nd.left;
            jn["right"] = nd.right;
        }
        nodes.push_back(std::move(jn));
    }
    return {{"format", "mpaudit-tree"},
            {"version", 1},
            {"params", params_to_json(t.params)},
            {"features", schema_to_json(Schema{t.features, ""})["columns"]},
            {"leaf_count", t.leaf_count()},
            {"nodes", nodes}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "mpaudit-tree") throw data_error("not a serialized tree");
    DecisionTree t;
    t.params = params_from_json(j.at("params"));
    t.features = schema_from_json({{"label", ""}, {"columns", j.at("features")}}).columns;
    for (const auto& jn : j.at("nodes")) {
        TreeNode nd;
        nd.parent = jn.at("parent").get<int>();
        if (jn.contains("feature")) {
            nd.feature = jn.at("feature").get<int>();
            nd.threshold = jn.at("threshold").get<double>();
            nd.left = jn.at("left").get<int>();
            nd.right = jn.at("right").get<int>();
        }
        nd.label = jn.at("label").get<std::uint8_t>();
        t.nodes.push_back(nd);
    }
    const int n = static_cast<int>(t.nodes.size());
    if (n == 0) throw data_error("serialized tree has no nodes");
    for (int i = 0; i < n; ++i) {
        const auto& nd = t.nodes[static_cast<std::size_t>(i)];
        if (nd.is_leaf()) {
            if (nd.label > 1) throw data_error("leaf label outside {0,1}");
            continue;
        }
        // Children always follow their parent, which also rules out cycles.
        if (nd.feature >= static_cast<int>(t.features.size()) || nd.left <= i || nd.left >= n ||
            nd.right <= i || nd.right >= n)
            throw data_error("serialized tree has dangling node references");
    }
    return t;
}

}  // namespace mpaudit
