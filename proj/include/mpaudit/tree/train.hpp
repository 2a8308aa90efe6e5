#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/random.hpp"
#include "mpaudit/data/dataset.hpp"
#include "mpaudit/tree/decision_tree.hpp"

namespace mpaudit {

/// Node impurity from class counts.
inline double impurity(Criterion c, double n0, double n1) {
    const double n = n0 + n1;
    if (n <= 0) return 0.0;
    const double p0 = n0 / n, p1 = n1 / n;
    if (c == Criterion::gini) return 1.0 - p0 * p0 - p1 * p1;
    double h = 0;
    if (p0 > 0) h -= p0 * std::log2(p0);
    if (p1 > 0) h -= p1 * std::log2(p1);
    return h;
}

/// Impurity gains closer than this are treated as ties.
inline constexpr double kGainTieTolerance = 1e-12;

namespace detail {

class CartBuilder {
public:
    CartBuilder(const Dataset& ds, const TreeParams& p) : ds_(ds), params_(p), rng_(p.seed) {}

    DecisionTree build() {
        tree_.params = params_;
        tree_.features = ds_.schema().columns;
        std::vector<std::size_t> rows(ds_.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        grow(rows, 0, -1);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0;
        double child_impurity = std::numeric_limits<double>::infinity();
    };

    int grow(std::vector<std::size_t>& rows, std::size_t depth, int parent) {
        std::size_t n1 = 0;
        for (auto r : rows) n1 += ds_.label(r);
        const std::size_t n0 = rows.size() - n1;

        const int id = static_cast<int>(tree_.nodes.size());
        TreeNode node;
        node.parent = parent;
        node.label = n1 > n0 ? 1 : 0;  // ties go to 0
        tree_.nodes.push_back(node);

        if (depth >= params_.max_depth || n0 == 0 || n1 == 0 || rows.size() < params_.min_samples_split)
            return id;
        const Split s = best_split(rows, n0, n1);
        if (s.feature < 0) return id;

        const bool categorical =
            ds_.column(static_cast<std::size_t>(s.feature)).kind == ColumnKind::categorical;
        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            const double x = ds_.at(r, static_cast<std::size_t>(s.feature));
            (categorical ? x == s.threshold : x <= s.threshold) ? left.push_back(r) : right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(left, depth + 1, id);
        const int r = grow(right, depth + 1, id);
        auto& nd = tree_.nodes[static_cast<std::size_t>(id)];
        nd.feature = s.feature;
        nd.threshold = s.threshold;
        nd.left = l;
        nd.right = r;
        return id;
    }

    // Reservoir-samples uniformly among equally good candidates.
    void offer(Split& best, std::size_t& ties, int feature, double threshold, double child_imp) {
        if (child_imp < best.child_impurity - kGainTieTolerance) {
            best = {feature, threshold, child_imp};
            ties = 1;
        } else if (child_imp <= best.child_impurity + kGainTieTolerance) {
            ++ties;
            std::uniform_int_distribution<std::size_t> pick(0, ties - 1);
            if (pick(rng_) == 0) best = {feature, threshold, child_imp};
        }
    }

    Split best_split(const std::vector<std::size_t>& rows, std::size_t n0, std::size_t n1) {
        Split best;
        std::size_t ties = 0;
        const double n = static_cast<double>(rows.size());
        std::vector<std::pair<double, std::uint8_t>> col(rows.size());
        for (std::size_t j = 0; j < ds_.cols(); ++j) {
            const auto& c = ds_.column(j);
            if (c.kind == ColumnKind::categorical) {
                std::vector<std::size_t> cnt0(c.categories.size(), 0), cnt1(c.categories.size(), 0);
                for (auto r : rows) {
                    const auto k = static_cast<std::size_t>(ds_.at(r, j));
                    (ds_.label(r) ? cnt1 : cnt0)[k]++;
                }
                for (std::size_t k = 0; k < c.categories.size(); ++k) {
                    const double l0 = static_cast<double>(cnt0[k]), l1 = static_cast<double>(cnt1[k]);
                    const double nl = l0 + l1;
                    if (nl == 0 || nl == n) continue;
                    const double r0 = static_cast<double>(n0) - l0, r1 = static_cast<double>(n1) - l1;
                    const double imp = (nl * impurity(params_.criterion, l0, l1) +
                                        (n - nl) * impurity(params_.criterion, r0, r1)) /
                                       n;
                    offer(best, ties, static_cast<int>(j), static_cast<double>(k), imp);
                }
                continue;
            }
            for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {ds_.at(rows[i], j), ds_.label(rows[i])};
            std::sort(col.begin(), col.end());
            double l0 = 0, l1 = 0;
            for (std::size_t i = 0; i + 1 < col.size(); ++i) {
                (col[i].second ? l1 : l0) += 1;
                const double a = col[i].first, b = col[i + 1].first;
                if (a == b) continue;
                const double nl = l0 + l1;
                const double imp = (nl * impurity(params_.criterion, l0, l1) +
                                    (n - nl) * impurity(params_.criterion, static_cast<double>(n0) - l0,
                                                        static_cast<double>(n1) - l1)) /
                                   n;
                double thr = a + (b - a) / 2;
                if (!(thr >= a && thr < b)) thr = a;  // adjacent doubles
                offer(best, ties, static_cast<int>(j), thr, imp);
            }
        }
        return best;
    }

    const Dataset& ds_;
    TreeParams params_;
    Rng rng_;
    DecisionTree tree_;
};

}  // namespace detail

/// Greedy CART: impurity-minimizing axis-aligned splits down to max_depth.
/// Nodes stop splitting when pure, at max_depth, below min_samples_split, or
/// when every feature is constant. Equal-gain candidates are chosen uniformly
/// under params.seed.
inline DecisionTree train(const Dataset& ds, const TreeParams& params) {
    if (ds.empty()) throw data_error("cannot train on an empty dataset");
    if (params.max_depth < 1) throw config_error("max_depth must be >= 1");
    return detail::CartBuilder(ds, params).build();
}

}  // namespace mpaudit
