#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mpaudit/data/split.hpp"
#include "mpaudit/data/synthetic.hpp"
#include "mpaudit/oracle.hpp"

using namespace mpaudit;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an mpaudit::Error";
    return ErrorKind::runtime;
}

// Best stump-or-constant objective by direct counting.
double best_depth_one(const Dataset& ds, double lambda) {
    const double n = static_cast<double>(ds.rows());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) ones += ds.label(i);
    double best = static_cast<double>(std::max(ones, ds.rows() - ones)) / n - lambda;
    for (std::size_t j = 0; j < ds.cols(); ++j) {
        std::size_t c[2][2] = {{0, 0}, {0, 0}};  // [feature value][label]
        for (std::size_t i = 0; i < ds.rows(); ++i) ++c[ds.at(i, j) == 1.0][ds.label(i)];
        // Distinct leaf labels only; equal leaves are the constant tree.
        const double a = static_cast<double>(c[0][0] + c[1][1]) / n;
        const double b = static_cast<double>(c[0][1] + c[1][0]) / n;
        best = std::max(best, std::max(a, b) - 2 * lambda);
    }
    return best;
}

}  // namespace

TEST(EnumerationCount, DepthOneIsTwoPlusTwoD) {
    for (std::size_t d : {1, 2, 5, 8, 20}) {
        EXPECT_EQ(enumeration_count(d, 1, true), 2 + 2 * d);
        EXPECT_EQ(enumeration_count(d, 1, false), 2 + 4 * d);
    }
    EXPECT_EQ(enumeration_count(7, 0, true), 2u);
}

TEST(EnumerationCount, MatchesEnumerator) {
    for (std::size_t features : {1, 2, 3, 4}) {
        const auto ds = fixtures::random_binary(40, features, features);
        for (std::size_t depth : {0, 1, 2}) {
            for (bool dedup : {true, false}) {
                EnumSpec spec{depth, 0.0, 1.0, dedup, 5'000'000};
                const auto rs = enumerate_rashomon(ds, ds, spec);
                EXPECT_EQ(rs.candidates_considered, enumeration_count(features, depth, dedup))
                    << features << " features, depth " << depth << ", dedup " << dedup;
                EXPECT_EQ(rs.size(), rs.candidates_considered);  // epsilon 1 keeps everything
            }
        }
    }
}

TEST(EnumerationCount, SaturatesInsteadOfOverflowing) {
    EXPECT_EQ(enumeration_count(5000, 3, false), std::numeric_limits<std::uint64_t>::max());
}

TEST(Enumerate, MembersAreRealTreesWithTheirScores) {
    const auto ds = fixtures::random_binary(120, 5, 3);
    auto [tr, te] = split(ds, SplitSpec{0.6, 4, {}});
    EnumSpec spec;
    spec.max_depth = 2;
    spec.lambda = 0.01;
    spec.epsilon = 0.05;
    const auto rs = enumerate_rashomon(tr, te, spec);
    ASSERT_GE(rs.size(), 1u);
    EXPECT_TRUE(rs.exhaustive);
    const auto score = ScoreSpec::penalized(0.01);
    for (const auto& m : rs.members) {
        EXPECT_LE(m.tree.depth(), 2u);
        EXPECT_NEAR(m.score, score.of(m.tree, te), 1e-12);
        EXPECT_EQ(m.correct, correct_count(m.tree, te));
        EXPECT_GE(m.score, rs.threshold - kThresholdSlack);
        EXPECT_LE(m.score, rs.baseline.score);
    }
    EXPECT_DOUBLE_EQ(rs.threshold, rs.baseline.score - 0.05);
}

TEST(Enumerate, BaselineMatchesDirectSearch) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = fixtures::random_binary(60, 4, seed, 0.3);
        for (double lambda : {0.0, 0.02}) {
            EnumSpec spec{1, lambda, 0.0, true, 1000};
            const auto rs = enumerate_rashomon(ds, ds, spec);
            EXPECT_NEAR(rs.baseline.score, best_depth_one(ds, lambda), 1e-12) << "seed " << seed;
            for (const auto& m : rs.members) EXPECT_NEAR(m.score, rs.baseline.score, 1e-12);
        }
    }
}

TEST(Enumerate, DedupKeepsTheSameOptimum) {
    const auto ds = fixtures::random_binary(80, 4, 9);
    const auto a = enumerate_rashomon(ds, ds, EnumSpec{2, 0.005, 0.0, true, 5'000'000});
    const auto b = enumerate_rashomon(ds, ds, EnumSpec{2, 0.005, 0.0, false, 5'000'000});
    EXPECT_DOUBLE_EQ(a.baseline.score, b.baseline.score);
}

TEST(Enumerate, BruteForceMatchesProfile) {
    const auto ds = fixtures::random_binary(150, 6, 12);
    auto [tr, te] = split(ds, SplitSpec{0.5, 1, {}});
    const auto rs = enumerate_rashomon(tr, te, EnumSpec{2, 0.01, 0.08, true, 5'000'000});
    EXPECT_EQ(brute_force_metrics(rs, te), conflict_profile(rs, te));
}

TEST(Enumerate, Errors) {
    const auto mixed = fixtures::random_mixed(30, 1);
    EXPECT_EQ(kind_of([&] { enumerate_rashomon(mixed, mixed, EnumSpec{}); }), ErrorKind::data);
    const auto bin = fixtures::random_binary(30, 4, 1);
    EXPECT_EQ(kind_of([&] { enumerate_rashomon(bin, bin, EnumSpec{4, 0, 0, true, ~0ULL}); }), ErrorKind::config);
    EXPECT_EQ(kind_of([&] { enumerate_rashomon(bin, bin, EnumSpec{2, 0, 0, true, 10}); }), ErrorKind::config);
    EXPECT_EQ(kind_of([&] { enumerate_rashomon(bin, bin, EnumSpec{2, 0, 1.5, true, 5'000'000}); }),
              ErrorKind::config);
    const auto other = fixtures::random_binary(30, 5, 1);
    EXPECT_EQ(kind_of([&] { enumerate_rashomon(bin, other, EnumSpec{}); }), ErrorKind::data);
}

TEST(GroundTruth, SyntheticRatios) {
    SyntheticSpec spec;
    spec.n_points = 1000;
    const auto ds = generate_synthetic(spec);
    const auto gt = synthetic_ground_truth(ds);
    EXPECT_FALSE(gt.counts_applicable);
    ASSERT_EQ(gt.rows(), ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) EXPECT_EQ(gt.conflict(i), ds.tags()->ground_truth[i]);
    EXPECT_EQ(gt.dataset_fingerprint, ds.fingerprint());
    EXPECT_THROW(synthetic_ground_truth(fixtures::random_mixed(10, 1)), Error);
}

TEST(GroundTruth, SurvivesSubsetting) {
    SyntheticSpec spec;
    spec.n_points = 500;
    const auto ds = generate_synthetic(spec);
    const auto r = split_detailed(ds, SplitSpec{0.8, 3, {}});
    const auto gt = synthetic_ground_truth(r.test);
    for (std::size_t i = 0; i < r.test.rows(); ++i)
        EXPECT_EQ(gt.conflict(i), ds.tags()->ground_truth[r.test_idx[i]]);
}
