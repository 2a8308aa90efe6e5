#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/parallel.hpp"
#include "mpaudit/core/random.hpp"
#include "mpaudit/data/dataset.hpp"
#include "mpaudit/data/split.hpp"
#include "mpaudit/multiplicity.hpp"
#include "mpaudit/tree/decision_tree.hpp"
#include "mpaudit/tree/grid.hpp"
#include "mpaudit/tree/train.hpp"

namespace mpaudit {

/// Model score used for both the baseline and membership: plain accuracy or
/// accuracy minus lambda per leaf.
struct ScoreSpec {
    enum class Kind { accuracy, penalized };
    Kind kind = Kind::accuracy;
    double lambda = 0.0;

    static ScoreSpec accuracy() { return {}; }
    static ScoreSpec penalized(double lambda) { return {Kind::penalized, lambda}; }

    double of(std::size_t correct, std::size_t rows, std::size_t leaves) const {
        const double acc = static_cast<double>(correct) / static_cast<double>(rows);
        return kind == Kind::accuracy ? acc : objective(acc, leaves, lambda);
    }
    double of(const DecisionTree& tree, const Dataset& ds) const {
        if (ds.empty()) throw data_error("cannot score on an empty dataset");
        return of(correct_count(tree, ds), ds.rows(), tree.leaf_count());
    }

    friend bool operator==(const ScoreSpec&, const ScoreSpec&) = default;
};

/// Scores within this distance below the threshold still qualify, absorbing
/// the rounding in (baseline - epsilon).
inline constexpr double kThresholdSlack = 1e-12;

inline bool meets_threshold(double score, double threshold) {
    return score >= threshold - kThresholdSlack;
}

struct BaselineSpec {
    enum class Mode { cross_validation, grid_best, external };
    Mode mode = Mode::cross_validation;
    std::size_t folds = 5;
    std::optional<DecisionTree> external_model;
};

inline std::string to_string(BaselineSpec::Mode m) {
    switch (m) {
        case BaselineSpec::Mode::cross_validation: return "cross_validation";
        case BaselineSpec::Mode::grid_best: return "grid_best";
        case BaselineSpec::Mode::external: return "external";
    }
    return "cross_validation";
}

/// Named epsilon values: 0.1 for accuracy-scored trees, 0.05 for the
/// leaf-penalized objective, 0.02 for boosted trees and MLPs.
inline double epsilon_preset(const std::string& name) {
    static const std::map<std::string, double> presets = {
        {"trees", 0.1}, {"penalized_trees", 0.05}, {"boosting_mlp", 0.02}};
    auto it = presets.find(name);
    if (it == presets.end()) throw config_error("unknown epsilon preset '" + name + "'");
    return it->second;
}

struct RashomonConfig {
    double epsilon = 0.1;
    ScoreSpec score;
    std::size_t n_models = 1;
    ParamGrid grid = default_grid();
    MultiplicityStrategy strategy = NoMultiplicity{};
    std::uint64_t master_seed = 0;
    BaselineSpec baseline;
    /// 0 scores and thresholds on the test set. Otherwise this fraction of
    /// the training rows is held out for scoring.
    double validation_fraction = 0.0;
    unsigned threads = 0;

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw config_error("epsilon must lie in [0,1]");
        if (n_models < 1) throw config_error("n_models must be >= 1");
        if (baseline.mode == BaselineSpec::Mode::cross_validation && baseline.folds < 2)
            throw config_error("cross-validation needs at least 2 folds");
        if (baseline.mode == BaselineSpec::Mode::external && !baseline.external_model)
            throw config_error("external baseline mode requires a model");
        if (score.kind == ScoreSpec::Kind::penalized && !(score.lambda >= 0))
            throw config_error("lambda must be >= 0");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
            throw config_error("validation_fraction must lie in [0,1)");
        grid.validate();
    }
};

struct Provenance {
    /// "candidate", "baseline" (cross-validated or external), or "exhaustive".
    std::string origin = "candidate";
    std::optional<std::size_t> candidate_index;
    std::optional<std::uint64_t> data_seed;
    TreeParams params;
};

struct ScoredModel {
    DecisionTree tree;
    double score = 0.0;
    /// Correct predictions on the scoring data.
    std::size_t correct = 0;
    Provenance provenance;
};

struct RashomonSet {
    ScoredModel baseline;
    std::string baseline_source;
    double epsilon = 0.0;
    ScoreSpec score;
    double threshold = 0.0;
    std::vector<ScoredModel> members;
    std::size_t candidates_considered = 0;
    /// Set when every candidate (other than the baseline) missed the threshold.
    bool all_candidates_rejected = false;
    bool exhaustive = false;
    std::string strategy = "none";
    std::string scored_on = "test";

    std::size_t size() const { return members.size(); }

    /// Appends a model if it meets the (unchanged) threshold.
    bool try_add(ScoredModel m) {
        if (!meets_threshold(m.score, threshold)) return false;
        members.push_back(std::move(m));
        return true;
    }
};

namespace detail {

inline std::vector<TreeParams> baseline_candidates(const ParamGrid& grid) {
    // One cell per (depth, criterion); the seed only matters on exact gain ties.
    std::vector<TreeParams> out;
    for (auto d : grid.depths)
        for (auto c : grid.criteria) {
            TreeParams p;
            p.max_depth = d;
            p.criterion = c;
            p.seed = grid.seeds.front();
            p.min_samples_split = grid.min_samples_split;
            out.push_back(p);
        }
    return out;
}

inline ScoredModel score_model(DecisionTree tree, const Dataset& ds, const ScoreSpec& score) {
    ScoredModel m;
    m.correct = correct_count(tree, ds);
    m.score = score.of(m.correct, ds.rows(), tree.leaf_count());
    m.provenance.params = tree.params;
    m.tree = std::move(tree);
    return m;
}

inline double cv_score(const Dataset& data, const TreeParams& p, const ScoreSpec& score,
                       std::size_t folds, std::uint64_t seed) {
    const auto order = shuffled_indices(data.rows(), seed);
    double total = 0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> fit, hold;
        for (std::size_t i = 0; i < order.size(); ++i) (i % folds == f ? hold : fit).push_back(order[i]);
        if (fit.empty() || hold.empty()) continue;
        const auto tree = train(data.subset(fit), p);
        total += score.of(tree, data.subset(hold));
        ++used;
    }
    if (used == 0) throw data_error("too few training rows for cross-validation");
    return total / static_cast<double>(used);
}

}  // namespace detail

/// The anchor model g0. Cross-validation picks grid parameters by mean fold
/// score and retrains on all of `fit`; grid_best picks the best scoring grid
/// model outright; external scores a supplied model.
inline ScoredModel find_baseline(const Dataset& fit, const Dataset& score_on, const RashomonConfig& cfg) {
    if (fit.empty() || score_on.empty()) throw data_error("baseline search needs nonempty datasets");
    const auto& b = cfg.baseline;
    if (b.mode == BaselineSpec::Mode::external) {
        if (!b.external_model) throw config_error("external baseline mode requires a model");
        auto m = detail::score_model(*b.external_model, score_on, cfg.score);
        m.provenance.origin = "baseline";
        return m;
    }
    cfg.grid.validate();
    const auto cands = detail::baseline_candidates(cfg.grid);
    std::vector<double> scores(cands.size());
    std::vector<std::optional<ScoredModel>> fitted(cands.size());
    const auto cv_seed = derive_seed(cfg.master_seed, 0xcf01dULL);
    parallel_for(cands.size(), cfg.threads, [&](std::size_t i) {
        if (b.mode == BaselineSpec::Mode::cross_validation) {
            scores[i] = detail::cv_score(fit, cands[i], cfg.score, b.folds, cv_seed);
        } else {
            fitted[i] = detail::score_model(train(fit, cands[i]), score_on, cfg.score);
            scores[i] = fitted[i]->score;
        }
    });
    // First maximum wins, so the choice is independent of scheduling.
    const auto best =
        static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    ScoredModel m = fitted[best] ? std::move(*fitted[best])
                                 : detail::score_model(train(fit, cands[best]), score_on, cfg.score);
    m.provenance.origin = "baseline";
    return m;
}

/// Trains the candidate population without filtering: model i sees
/// derive(fit, strategy, plan[i]) with grid cell i.
inline std::vector<ScoredModel> train_candidates(const Dataset& fit, const Dataset& score_on,
                                                 const RashomonConfig& cfg) {
    const auto seeds = derivation_plan(cfg.strategy, cfg.n_models, cfg.master_seed);
    const auto params = sample_grid(cfg.grid, cfg.n_models, cfg.master_seed);
    validate_strategy(cfg.strategy, fit);
    std::vector<ScoredModel> out(cfg.n_models);
    parallel_for(cfg.n_models, cfg.threads, [&](std::size_t i) {
        TreeParams p = params[i];
        if (cfg.score.kind == ScoreSpec::Kind::penalized) p.leaf_penalty_lambda = cfg.score.lambda;
        out[i] = detail::score_model(train(derive(fit, cfg.strategy, seeds[i]), p), score_on, cfg.score);
        out[i].provenance.candidate_index = i;
        out[i].provenance.data_seed = seeds[i];
    });
    return out;
}

/// Assembles a set from a baseline and scored candidates. The baseline is
/// promoted to the best candidate if one outscores it; the threshold is then
/// fixed before any candidate is filtered. A baseline that is not itself a
/// candidate is kept as a member unless it came from outside (external).
inline RashomonSet assemble(ScoredModel baseline, std::string baseline_source,
                            std::vector<ScoredModel> candidates, const RashomonConfig& cfg) {
    RashomonSet rs;
    rs.epsilon = cfg.epsilon;
    rs.score = cfg.score;
    rs.strategy = strategy_name(cfg.strategy);
    rs.candidates_considered = candidates.size();

    std::optional<std::size_t> promoted;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].score > (promoted ? candidates[*promoted].score : baseline.score)) promoted = i;
    bool retain_baseline = cfg.baseline.mode != BaselineSpec::Mode::external;
    if (promoted) {
        rs.baseline = candidates[*promoted];
        rs.baseline_source = "candidate";
        retain_baseline = false;
    } else {
        rs.baseline = std::move(baseline);
        rs.baseline_source = std::move(baseline_source);
    }
    rs.threshold = rs.baseline.score - cfg.epsilon;

    if (retain_baseline) rs.members.push_back(rs.baseline);
    std::size_t accepted = 0;
    for (auto& c : candidates) accepted += rs.try_add(std::move(c));
    rs.all_candidates_rejected = accepted == 0;
    if (rs.members.empty())
        throw runtime_error("no model meets the Rashomon threshold " + std::to_string(rs.threshold));
    return rs;
}

/// Ad-hoc Rashomon set: baseline, candidate population, threshold filter.
inline RashomonSet build(const Dataset& train_ds, const Dataset& test_ds, const RashomonConfig& cfg) {
    cfg.validate();
    if (train_ds.empty() || test_ds.empty()) throw data_error("build needs nonempty train and test data");
    Dataset fit = train_ds;
    Dataset score_on = test_ds;
    if (cfg.validation_fraction > 0) {
        SplitSpec s;
        s.train_fraction = 1.0 - cfg.validation_fraction;
        s.seed = derive_seed(cfg.master_seed, 0x7a11dULL);
        std::tie(fit, score_on) = split(train_ds, s);
        if (fit.empty() || score_on.empty()) throw data_error("validation split left an empty side");
    }
    auto baseline = find_baseline(fit, score_on, cfg);
    auto candidates = train_candidates(fit, score_on, cfg);
    auto rs = assemble(std::move(baseline), to_string(cfg.baseline.mode), std::move(candidates), cfg);
    rs.scored_on = cfg.validation_fraction > 0 ? "validation" : "test";
    return rs;
}

/// |R| x |D| matrix of hard predictions, member-major.
class PredictionMatrix {
public:
    PredictionMatrix() = default;
    PredictionMatrix(std::size_t models, std::size_t rows) : models_(models), rows_(rows), data_(models * rows) {}

    std::size_t models() const noexcept { return models_; }
    std::size_t rows() const noexcept { return rows_; }
    std::uint8_t at(std::size_t g, std::size_t x) const { return data_[g * rows_ + x]; }
    std::uint8_t& at(std::size_t g, std::size_t x) { return data_[g * rows_ + x]; }

    /// n1(x, R): members predicting 1 on row x.
    std::size_t positive_votes(std::size_t x) const {
        std::size_t n = 0;
        for (std::size_t g = 0; g < models_; ++g) n += at(g, x);
        return n;
    }

private:
    std::size_t models_ = 0, rows_ = 0;
    std::vector<std::uint8_t> data_;
};

inline PredictionMatrix predictions_matrix(const std::vector<ScoredModel>& members, const Dataset& ds,
                                           unsigned threads = 0) {
    PredictionMatrix m(members.size(), ds.rows());
    std::vector<FeatureBinding> bindings;
    for (const auto& g : members) bindings.push_back(bind(g.tree, ds.schema()));
    parallel_for(members.size(), threads, [&](std::size_t g) {
        for (std::size_t x = 0; x < ds.rows(); ++x) m.at(g, x) = predict(members[g].tree, ds.row(x), bindings[g]);
    });
    return m;
}

inline PredictionMatrix predictions_matrix(const RashomonSet& rs, const Dataset& ds, unsigned threads = 0) {
    return predictions_matrix(rs.members, ds, threads);
}

}  // namespace mpaudit
