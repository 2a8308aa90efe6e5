#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/data/dataset.hpp"
#include "mpaudit/metrics.hpp"
#include "mpaudit/rashomon.hpp"
#include "mpaudit/tree/decision_tree.hpp"

namespace mpaudit {

/// Exhaustive enumeration of small trees over binary features.
struct EnumSpec {
    std::size_t max_depth = 2;
    double lambda = 0.0;
    double epsilon = 0.0;
    /// Skip splits whose children are identical and splits on a feature
    /// already fixed on the path; both are equivalent to a smaller tree.
    bool dedup = true;
    std::uint64_t cap = 5'000'000;
};

inline constexpr std::size_t kMaxEnumerationDepth = 3;

/// Number of candidate trees of depth <= `depth` over `features` binary
/// features; saturates at UINT64_MAX.
inline std::uint64_t enumeration_count(std::size_t features, std::size_t depth, bool dedup) {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    auto mul = [](std::uint64_t a, std::uint64_t b) {
        return (a != 0 && b > kMax / a) ? kMax : a * b;
    };
    auto add = [](std::uint64_t a, std::uint64_t b) { return a > kMax - b ? kMax : a + b; };
    if (depth == 0) return 2;
    if (dedup) {
        if (features == 0) return 2;
        const std::uint64_t sub = enumeration_count(features - 1, depth - 1, true);
        const std::uint64_t ordered_distinct = sub == kMax ? kMax : mul(sub, sub) - sub;
        return add(2, mul(features, ordered_distinct));
    }
    const std::uint64_t sub = enumeration_count(features, depth - 1, false);
    return add(2, mul(features, mul(sub, sub)));
}

namespace detail {

using Bits = std::vector<std::uint64_t>;

/// Builds every tree bottom-up, carrying each subtree's predictions on the
/// scoring rows as a bitset so a parent's predictions cost one pass.
class TreeEnumerator {
public:
    struct Sub {
        Bits pred;
        std::uint32_t leaves = 1;
        int feature = -1;  // -1: constant leaf
        std::uint8_t label = 0;
        std::uint32_t left = 0, right = 0;  // indices into the child pool
    };

    TreeEnumerator(const Dataset& score_on, const EnumSpec& spec) : ds_(score_on), spec_(spec) {
        n_ = ds_.rows();
        words_ = (n_ + 63) / 64;
        tail_ = n_ % 64 == 0 ? ~0ULL : ((1ULL << (n_ % 64)) - 1);
        for (std::size_t j = 0; j < ds_.cols(); ++j) {
            Bits b(words_, 0);
            for (std::size_t i = 0; i < n_; ++i)
                if (ds_.at(i, j) == 1.0) b[i / 64] |= 1ULL << (i % 64);
            feature_bits_.push_back(std::move(b));
        }
        labels_.assign(words_, 0);
        for (std::size_t i = 0; i < n_; ++i)
            if (ds_.label(i)) labels_[i / 64] |= 1ULL << (i % 64);
    }

    std::size_t rows() const { return n_; }

    std::size_t correct(const Bits& pred) const {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t agree = ~(pred[w] ^ labels_[w]);
            if (w + 1 == words_) agree &= tail_;
            c += static_cast<std::size_t>(std::popcount(agree));
        }
        return c;
    }

    /// Visits every candidate in canonical order: constant 0, constant 1, then
    /// splits by ascending feature, left-subtree index, right-subtree index.
    template <class Visit>
    void for_each(Visit&& visit) {
        for (auto& s : constants()) visit(s, std::optional<Top>{});
        if (spec_.max_depth == 0) return;
        Sub top;
        top.pred.assign(words_, 0);
        for (std::size_t f = 0; f < ds_.cols(); ++f) {
            const std::uint64_t mask = spec_.dedup ? (1ULL << f) : 0;
            const auto& children = pool(spec_.max_depth - 1, mask);
            for (std::uint32_t l = 0; l < children.size(); ++l) {
                for (std::uint32_t r = 0; r < children.size(); ++r) {
                    if (spec_.dedup && l == r) continue;
                    combine(top, f, children[l], children[r]);
                    top.left = l;
                    top.right = r;
                    visit(top, std::optional<Top>{Top{f, mask}});
                }
            }
        }
    }

    struct Top {
        std::size_t feature;
        std::uint64_t child_mask;
    };

    /// Expands a visited candidate into a DecisionTree over all columns.
    DecisionTree materialize(const Sub& s, const std::optional<Top>& top) const {
        DecisionTree t;
        t.features = ds_.schema().columns;
        t.params.max_depth = spec_.max_depth;
        t.params.leaf_penalty_lambda = spec_.lambda;
        if (!top) {
            emit(t, s, -1, 0, 0);
            return t;
        }
        TreeNode root;
        root.feature = static_cast<int>(top->feature);
        root.threshold = 0.5;
        t.nodes.push_back(root);
        const auto& children = pools_.at({spec_.max_depth - 1, top->child_mask});
        const int l = emit(t, children[s.left], 0, spec_.max_depth - 1, top->child_mask);
        const int r = emit(t, children[s.right], 0, spec_.max_depth - 1, top->child_mask);
        t.nodes[0].left = l;
        t.nodes[0].right = r;
        return t;
    }

private:
    std::vector<Sub> constants() const {
        Sub zero, one;
        zero.pred.assign(words_, 0);
        one.pred.assign(words_, ~0ULL);
        one.label = 1;
        return {zero, one};
    }

    void combine(Sub& out, std::size_t f, const Sub& l, const Sub& r) const {
        const auto& fb = feature_bits_[f];
        for (std::size_t w = 0; w < words_; ++w) out.pred[w] = (~fb[w] & l.pred[w]) | (fb[w] & r.pred[w]);
        out.leaves = l.leaves + r.leaves;
        out.feature = static_cast<int>(f);
    }

    // Subtrees of depth <= `depth` that avoid features in `used` (dedup) or
    // may use any feature (no dedup, used == 0).
    const std::vector<Sub>& pool(std::size_t depth, std::uint64_t used) {
        const auto key = std::make_pair(depth, used);
        if (auto it = pools_.find(key); it != pools_.end()) return it->second;
        std::vector<Sub> out = constants();
        if (depth > 0) {
            for (std::size_t f = 0; f < ds_.cols(); ++f) {
                if (spec_.dedup && (used >> f & 1ULL)) continue;
                const std::uint64_t child_mask = spec_.dedup ? (used | (1ULL << f)) : 0;
                const auto& children = pool(depth - 1, child_mask);
                for (std::uint32_t l = 0; l < children.size(); ++l) {
                    for (std::uint32_t r = 0; r < children.size(); ++r) {
                        if (spec_.dedup && l == r) continue;
                        Sub s;
                        s.pred.assign(words_, 0);
                        combine(s, f, children[l], children[r]);
                        s.left = l;
                        s.right = r;
                        out.push_back(std::move(s));
                    }
                }
            }
        }
        return pools_.emplace(key, std::move(out)).first->second;
    }

    int emit(DecisionTree& t, const Sub& s, int parent, std::size_t depth, std::uint64_t used) const {
        const int id = static_cast<int>(t.nodes.size());
        TreeNode nd;
        nd.parent = parent;
        if (s.feature < 0) {
            nd.label = s.label;
            t.nodes.push_back(nd);
            return id;
        }
        nd.feature = s.feature;
        nd.threshold = 0.5;
        t.nodes.push_back(nd);
        const std::uint64_t child_mask = spec_.dedup ? (used | (1ULL << s.feature)) : 0;
        const auto& children = pools_.at({depth - 1, child_mask});
        const int l = emit(t, children[s.left], id, depth - 1, child_mask);
        const int r = emit(t, children[s.right], id, depth - 1, child_mask);
        t.nodes[static_cast<std::size_t>(id)].left = l;
        t.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    const Dataset& ds_;
    EnumSpec spec_;
    std::size_t n_ = 0, words_ = 0;
    std::uint64_t tail_ = ~0ULL;
    std::vector<Bits> feature_bits_;
    Bits labels_;
    std::map<std::pair<std::size_t, std::uint64_t>, std::vector<Sub>> pools_;
};

inline void require_binary(const Dataset& ds, const char* which) {
    for (const auto& c : ds.schema().columns)
        if (c.kind != ColumnKind::binary)
            throw data_error(std::string("exhaustive enumeration needs binary features; ") + which +
                             " column '" + c.name + "' is " + std::string(to_string(c.kind)));
}

}  // namespace detail

/// The exact Rashomon set of all trees of depth <= spec.max_depth under
/// Obj = accuracy - lambda * leaves, scored on `test`. Every member is
/// weighted equally; the baseline is the first maximizer in canonical order.
inline RashomonSet enumerate_rashomon(const Dataset& train_ds, const Dataset& test, const EnumSpec& spec) {
    detail::require_binary(train_ds, "training");
    detail::require_binary(test, "test");
    if (!(train_ds.schema() == test.schema())) throw data_error("train and test schemas differ");
    if (test.empty()) throw data_error("enumeration needs a nonempty test set");
    if (spec.max_depth > kMaxEnumerationDepth)
        throw config_error("enumeration depth is capped at " + std::to_string(kMaxEnumerationDepth));
    if (spec.dedup && test.cols() > 63) throw config_error("enumeration supports at most 63 features");
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) throw config_error("epsilon must lie in [0,1]");
    const auto count = enumeration_count(test.cols(), spec.max_depth, spec.dedup);
    if (count > spec.cap)
        throw config_error("enumeration would produce " + std::to_string(count) +
                           " trees, above the cap of " + std::to_string(spec.cap));

    const ScoreSpec score = ScoreSpec::penalized(spec.lambda);
    detail::TreeEnumerator en(test, spec);
    std::vector<double> scores;
    scores.reserve(count);
    en.for_each([&](const auto& s, const auto&) {
        scores.push_back(score.of(en.correct(s.pred), en.rows(), s.leaves));
    });
    const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());

    RashomonSet rs;
    rs.exhaustive = true;
    rs.epsilon = spec.epsilon;
    rs.score = score;
    rs.baseline_source = "exhaustive";
    rs.strategy = "exhaustive";
    rs.candidates_considered = scores.size();
    rs.threshold = scores[best] - spec.epsilon;

    std::size_t idx = 0;
    en.for_each([&](const auto& s, const auto& top) {
        const std::size_t i = idx++;
        if (i != best && !meets_threshold(scores[i], rs.threshold)) return;
        ScoredModel m;
        m.tree = en.materialize(s, top);
        m.score = scores[i];
        m.correct = en.correct(s.pred);
        m.provenance.origin = "exhaustive";
        m.provenance.candidate_index = i;
        m.provenance.params = m.tree.params;
        if (i == best) rs.baseline = m;
        rs.members.push_back(std::move(m));
    });
    return rs;
}

/// Vote counts recomputed with a plain per-row, per-model loop. Shares no
/// code path with the prediction-matrix route beyond single-tree predict.
inline ConflictProfile brute_force_metrics(const RashomonSet& rs, const Dataset& ds) {
    if (rs.members.empty()) throw data_error("conflict ratio needs at least one model");
    std::vector<FeatureBinding> bindings;
    bindings.reserve(rs.members.size());
    for (const auto& g : rs.members) bindings.push_back(bind(g.tree, ds.schema()));
    ConflictProfile p;
    p.set_size = rs.members.size();
    p.dataset_fingerprint = ds.fingerprint();
    for (std::size_t x = 0; x < ds.rows(); ++x) {
        ConflictRecord r;
        r.row_id = ds.row_id(x);
        for (std::size_t g = 0; g < rs.members.size(); ++g) {
            if (predict(rs.members[g].tree, ds.row(x), bindings[g]) == 1)
                ++r.n1;
            else
                ++r.n0;
        }
        p.records.push_back(r);
    }
    return p;
}

/// Denominator used to encode ground-truth ratios as counts.
inline constexpr std::size_t kGroundTruthScale = 1'000'000;

/// Known-by-construction conflict ratios of a synthetic dataset.
inline ConflictProfile synthetic_ground_truth(const Dataset& ds) {
    if (!ds.tags()) throw data_error("dataset carries no synthetic component tags");
    ConflictProfile p;
    p.set_size = kGroundTruthScale;
    p.dataset_fingerprint = ds.fingerprint();
    p.counts_applicable = false;
    for (std::size_t x = 0; x < ds.rows(); ++x) {
        const auto minority =
            static_cast<std::size_t>(std::llround(ds.tags()->ground_truth[x] * kGroundTruthScale));
        p.records.push_back({ds.row_id(x), kGroundTruthScale - minority, minority});
    }
    return p;
}

}  // namespace mpaudit
