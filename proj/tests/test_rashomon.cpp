#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "mpaudit/data/split.hpp"
#include "mpaudit/metrics.hpp"
#include "mpaudit/persist.hpp"
#include "mpaudit/rashomon.hpp"

using namespace mpaudit;

namespace {

struct Data {
    Dataset train, test;
};

Data mixed(std::size_t n, std::uint64_t seed) {
    auto [tr, te] = split(fixtures::random_mixed(n, seed), SplitSpec{0.7, seed, {}});
    return {std::move(tr), std::move(te)};
}

RashomonConfig small_config(double epsilon, std::size_t n_models = 40) {
    RashomonConfig c;
    c.epsilon = epsilon;
    c.n_models = n_models;
    c.strategy = Bootstrap{150};
    c.master_seed = 17;
    c.grid.depths = {1, 2, 3, 4, 6};
    c.grid.seeds = {0, 1, 2, 3, 4, 5, 6, 7};
    return c;
}

std::set<std::size_t> candidate_ids(const RashomonSet& rs) {
    std::set<std::size_t> out;
    for (const auto& m : rs.members)
        if (m.provenance.candidate_index) out.insert(*m.provenance.candidate_index);
    return out;
}

ScoredModel scored(double score, std::optional<std::size_t> idx = std::nullopt) {
    ScoredModel m;
    m.tree = constant_tree(0);
    m.score = score;
    m.provenance.candidate_index = idx;
    return m;
}

}  // namespace

TEST(Build, MembershipAndBaselineInvariants) {
    const auto d = mixed(600, 1);
    const auto cfg = small_config(0.05);
    const auto rs = build(d.train, d.test, cfg);
    ASSERT_GE(rs.size(), 1u);
    EXPECT_DOUBLE_EQ(rs.threshold, rs.baseline.score - 0.05);
    const auto all = train_candidates(d.train, d.test, cfg);
    for (const auto& c : all) EXPECT_LE(c.score, rs.baseline.score);
    for (const auto& m : rs.members) {
        EXPECT_GE(m.score, rs.threshold - kThresholdSlack);
        EXPECT_EQ(m.score, cfg.score.of(m.tree, d.test));
    }
    EXPECT_EQ(rs.candidates_considered, cfg.n_models);
    EXPECT_EQ(rs.strategy, "bootstrap");
}

TEST(Build, EpsilonOneKeepsEveryCandidate) {
    const auto d = mixed(500, 2);
    const auto rs = build(d.train, d.test, small_config(1.0, 30));
    std::set<std::size_t> want;
    for (std::size_t i = 0; i < 30; ++i) want.insert(i);
    EXPECT_EQ(candidate_ids(rs), want);
    EXPECT_FALSE(rs.all_candidates_rejected);
}

TEST(Build, EpsilonZeroKeepsOnlyTies) {
    const auto d = mixed(500, 3);
    const auto rs = build(d.train, d.test, small_config(0.0, 30));
    for (const auto& m : rs.members) EXPECT_EQ(m.score, rs.baseline.score);
}

TEST(Build, MembersNestInEpsilon) {
    const auto d = mixed(500, 4);
    std::set<std::size_t> prev;
    for (double eps : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0}) {
        const auto ids = candidate_ids(build(d.train, d.test, small_config(eps, 30)));
        EXPECT_TRUE(std::includes(ids.begin(), ids.end(), prev.begin(), prev.end())) << "eps " << eps;
        prev = ids;
    }
}

TEST(Build, DeterministicAcrossThreadCounts) {
    const auto d = mixed(500, 5);
    auto cfg = small_config(0.1);
    cfg.threads = 1;
    const auto a = build(d.train, d.test, cfg);
    cfg.threads = 4;
    const auto b = build(d.train, d.test, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.members[i].tree, b.members[i].tree);
        EXPECT_EQ(a.members[i].score, b.members[i].score);
        EXPECT_EQ(a.members[i].provenance.data_seed, b.members[i].provenance.data_seed);
    }
    EXPECT_EQ(a.baseline.tree, b.baseline.tree);
}

TEST(Build, PenalizedScore) {
    const auto d = mixed(500, 6);
    auto cfg = small_config(0.05);
    cfg.score = ScoreSpec::penalized(0.01);
    const auto rs = build(d.train, d.test, cfg);
    for (const auto& m : rs.members) {
        EXPECT_NEAR(m.score, accuracy(m.tree, d.test) - 0.01 * static_cast<double>(m.tree.leaf_count()), 1e-12);
        EXPECT_GE(m.score, rs.threshold - kThresholdSlack);
    }
}

TEST(Build, ValidationHoldout) {
    const auto d = mixed(600, 7);
    auto cfg = small_config(0.05);
    cfg.validation_fraction = 0.25;
    const auto rs = build(d.train, d.test, cfg);
    EXPECT_EQ(rs.scored_on, "validation");
    EXPECT_GE(rs.size(), 1u);
}

TEST(Build, AllStrategiesRun) {
    const auto d = mixed(400, 8);
    const auto pool = std::make_shared<const Dataset>(fixtures::random_mixed(2000, 99));
    const std::vector<MultiplicityStrategy> all = {NoMultiplicity{}, Bootstrap{100}, FeatureSubsample{3},
                                                   FeatureNoise{0.05, 0.01, true}, FreshResample{pool, 280}};
    for (const auto& s : all) {
        auto cfg = small_config(0.1, 20);
        cfg.strategy = s;
        const auto rs = build(d.train, d.test, cfg);
        EXPECT_GE(rs.size(), 1u) << strategy_name(s);
        EXPECT_EQ(conflict_profile(rs, d.test).rows(), d.test.rows());
    }
}

TEST(Build, ConfigValidation) {
    const auto d = mixed(200, 9);
    auto bad = small_config(1.5);
    EXPECT_THROW(build(d.train, d.test, bad), Error);
    bad = small_config(0.1, 0);
    EXPECT_THROW(build(d.train, d.test, bad), Error);
    bad = small_config(0.1);
    bad.baseline.folds = 1;
    EXPECT_THROW(build(d.train, d.test, bad), Error);
    bad = small_config(0.1);
    bad.baseline.mode = BaselineSpec::Mode::external;
    EXPECT_THROW(build(d.train, d.test, bad), Error);
    bad = small_config(0.1, 1000);  // grid holds 5 x 2 x 8 = 80 cells
    EXPECT_THROW(build(d.train, d.test, bad), Error);
}

TEST(Baseline, SingleCellGrid) {
    const auto d = mixed(400, 10);
    auto cfg = small_config(0.1);
    cfg.grid.depths = {3};
    cfg.grid.criteria = {Criterion::entropy};
    cfg.grid.seeds = {4};
    const auto b = find_baseline(d.train, d.test, cfg);
    TreeParams p;
    p.max_depth = 3;
    p.criterion = Criterion::entropy;
    p.seed = 4;
    EXPECT_EQ(b.tree, train(d.train, p));
}

TEST(Baseline, GridBestTakesArgmax) {
    const auto d = mixed(400, 11);
    auto cfg = small_config(0.1);
    cfg.baseline.mode = BaselineSpec::Mode::grid_best;
    cfg.grid.depths = {1, 5};
    cfg.grid.criteria = {Criterion::gini};
    const auto b = find_baseline(d.train, d.test, cfg);
    double best = 0;
    for (std::size_t depth : {1, 5}) {
        TreeParams p;
        p.max_depth = depth;
        best = std::max(best, accuracy(train(d.train, p), d.test));
    }
    EXPECT_EQ(b.score, best);
}

TEST(Baseline, ExternalModelIsScoredNotRetained) {
    const auto d = mixed(400, 12);
    auto cfg = small_config(0.2);
    cfg.baseline.mode = BaselineSpec::Mode::external;
    TreeParams p;
    p.max_depth = 12;
    cfg.baseline.external_model = train(d.train, p);
    const auto rs = build(d.train, d.test, cfg);
    for (const auto& m : rs.members) EXPECT_TRUE(m.provenance.candidate_index.has_value());
    if (rs.baseline_source == "external") {
        EXPECT_EQ(rs.baseline.tree, *cfg.baseline.external_model);
    }
}

TEST(Assemble, PromotesBetterCandidate) {
    RashomonConfig cfg;
    cfg.epsilon = 0.1;
    const auto rs = assemble(scored(0.7), "cross_validation", {scored(0.8, 0), scored(0.65, 1), scored(0.75, 2)}, cfg);
    EXPECT_EQ(rs.baseline_source, "candidate");
    EXPECT_DOUBLE_EQ(rs.threshold, 0.7);
    EXPECT_EQ(candidate_ids(rs), (std::set<std::size_t>{0, 2}));
    EXPECT_EQ(rs.size(), 2u);  // promoted baseline is not duplicated
}

TEST(Assemble, RetainsBaselineAndFlagsRejection) {
    RashomonConfig cfg;
    cfg.epsilon = 0.05;
    const auto rs = assemble(scored(0.9), "cross_validation", {scored(0.5, 0), scored(0.6, 1)}, cfg);
    EXPECT_TRUE(rs.all_candidates_rejected);
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_FALSE(rs.members[0].provenance.candidate_index.has_value());
}

TEST(Assemble, ExternalBaselineWithNoSurvivorsIsError) {
    RashomonConfig cfg;
    cfg.epsilon = 0.05;
    cfg.baseline.mode = BaselineSpec::Mode::external;
    EXPECT_THROW(assemble(scored(0.9), "external", {scored(0.5, 0)}, cfg), Error);
}

TEST(Assemble, ThresholdIgnoresLaterAdditions) {
    RashomonConfig cfg;
    cfg.epsilon = 0.1;
    auto rs = assemble(scored(0.8), "cross_validation", {scored(0.75, 0)}, cfg);
    const double thr = rs.threshold;
    EXPECT_TRUE(rs.try_add(scored(0.71, 5)));
    EXPECT_FALSE(rs.try_add(scored(0.69, 6)));
    EXPECT_EQ(rs.threshold, thr);
}

TEST(PredictionMatrix, ColumnSumsAreVotes) {
    const auto d = mixed(300, 13);
    const auto rs = build(d.train, d.test, small_config(0.2));
    const auto m = predictions_matrix(rs, d.test);
    ASSERT_EQ(m.models(), rs.size());
    ASSERT_EQ(m.rows(), d.test.rows());
    for (std::size_t x = 0; x < m.rows(); ++x) {
        std::size_t n1 = 0;
        for (std::size_t g = 0; g < m.models(); ++g) {
            EXPECT_EQ(m.at(g, x), predict_all(rs.members[g].tree, d.test)[x]);
            n1 += m.at(g, x);
        }
        EXPECT_EQ(m.positive_votes(x), n1);
    }
}

TEST(PredictionMatrix, ConstantAndDuplicateMembers) {
    const auto d = mixed(100, 14);
    std::vector<ScoredModel> members{scored(0.5), scored(0.5)};
    members[0].tree.features = d.test.schema().columns;
    members[1].tree.features = d.test.schema().columns;
    const auto m = predictions_matrix(members, d.test);
    for (std::size_t x = 0; x < m.rows(); ++x) {
        EXPECT_EQ(m.at(0, x), 0);
        EXPECT_EQ(m.at(0, x), m.at(1, x));
    }
}

TEST(Persist, RoundTripPreservesPredictions) {
    const auto d = mixed(400, 15);
    auto cfg = small_config(0.1);
    cfg.score = ScoreSpec::penalized(0.005);
    const auto rs = build(d.train, d.test, cfg);
    const auto dir = fixtures::scratch("persist");
    SetContext ctx;
    ctx.schema = d.test.schema();
    ctx.config_fingerprint = "abc";
    ctx.transforms = {{Transform::Op::binarize, {"x"}, {"a", "b"}}};
    save_rashomon(rs, ctx, dir);
    const auto loaded = load_rashomon(dir);
    ASSERT_EQ(loaded.set.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        EXPECT_EQ(loaded.set.members[i].tree, rs.members[i].tree);
        EXPECT_EQ(loaded.set.members[i].score, rs.members[i].score);
        EXPECT_EQ(loaded.set.members[i].provenance.data_seed, rs.members[i].provenance.data_seed);
    }
    EXPECT_EQ(loaded.set.threshold, rs.threshold);
    EXPECT_EQ(loaded.set.score, rs.score);
    EXPECT_EQ(loaded.set.baseline.tree, rs.baseline.tree);
    EXPECT_EQ(loaded.context.schema, ctx.schema);
    EXPECT_EQ(loaded.context.transforms, ctx.transforms);
    EXPECT_EQ(conflict_profile(loaded.set, d.test), conflict_profile(rs, d.test));
}

TEST(Persist, MissingDirectoryIsDataError) {
    try {
        load_rashomon(fixtures::scratch("empty_set"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}
