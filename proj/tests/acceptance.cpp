// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "mpaudit/audit/commands.hpp"
#include "mpaudit/metrics.hpp"
#include "mpaudit/oracle.hpp"
#include "mpaudit/rashomon.hpp"

using namespace mpaudit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
    std::printf("%s criterion %d: %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

template <class Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("threw: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, ok, detail, s);
}

// The synthetic benchmark: 2000 train / 500 test, fresh draws of 2000 rows
// from a 400k-point pool per model.
nlohmann::json synthetic_config(std::size_t n_models, std::size_t grid_seeds) {
    auto j = nlohmann::json::parse(R"({
        "version": 1,
        "data": {"synthetic": {"n_points": 2500, "seed": 7}},
        "split": {"fixed_sizes": [2000, 500], "seed": 1},
        "rashomon": {
            "epsilon": 0.1,
            "score": "accuracy",
            "strategy": {"type": "fresh_resample", "sample_size": 2000, "pool": {"synthetic_points": 400000}},
            "master_seed": 42,
            "baseline": {"mode": "cross_validation", "folds": 5}
        }
    })");
    j["rashomon"]["n_models"] = n_models;
    j["rashomon"]["grid"] = {{"seeds", grid_seeds}};
    return j;
}

struct Built {
    RashomonSet set;
    SplitResult split;
    RashomonConfig config;
};

Built build_synthetic(const nlohmann::json& j) {
    const auto cfg = audit::parse_config(j, MPAUDIT_TEST_TMP);
    const auto data = audit::load_data(cfg);
    Built b{{}, split_detailed(data.dataset, cfg.split), cfg.rashomon};
    b.config.strategy = audit::resolve_strategy(cfg, b.split, data.dataset);
    b.set = build(b.split.train, b.split.test, b.config);
    return b;
}

bool ground_truth_recovery(std::string& detail) {
    const auto d = build_synthetic(synthetic_config(200, 12));
    const auto& test = d.split.test;
    const auto pd = conflict_profile(d.set, test);

    // Condition (a) shares the threshold of (d) through its baseline.
    auto cfg_a = d.config;
    cfg_a.strategy = NoMultiplicity{};
    cfg_a.baseline.mode = BaselineSpec::Mode::external;
    cfg_a.baseline.external_model = d.set.baseline.tree;
    const auto a = build(d.split.train, test, cfg_a);
    const auto pa = conflict_profile(a, test);

    std::size_t overlap = 0, overlap_high = 0, clear = 0, clear_low = 0;
    for (std::size_t x = 0; x < test.rows(); ++x) {
        const auto& r = pd.records[x];
        if (test.tags()->ground_truth[x] == 0.5) {
            ++overlap;
            overlap_high += r.minority() * 10 >= 4 * pd.set_size;
        } else {
            ++clear;
            clear_low += r.minority() * 10 <= pd.set_size;
        }
    }
    const double hi = static_cast<double>(overlap_high) / static_cast<double>(overlap);
    const double lo = static_cast<double>(clear_low) / static_cast<double>(clear);
    const double ad = ambiguity(pd, 0.3), aa = ambiguity(pa, 0.3);
    detail = "(d) " + std::to_string(d.set.size()) + " members, overlap rows with c>=0.4 " + fmt(hi) +
             ", other rows with c<=0.1 " + fmt(lo) + "; A_0.3 (d) " + fmt(ad) + " vs (a) " + fmt(aa) + " with " +
             std::to_string(a.size()) + " members";
    return hi >= 0.85 && lo >= 0.90 && aa <= ad - 0.1;
}

bool exhaustive_dominance(std::string& detail) {
    const auto ds = fixtures::random_binary(300, 8, 2024, 0.25);
    const auto [train_ds, test_ds] = split(ds, SplitSpec{0, 3, std::make_pair<std::size_t, std::size_t>(200, 100)});
    EnumSpec spec;
    spec.max_depth = 2;
    spec.lambda = 0.01;
    spec.epsilon = 0.05;
    const auto ex = enumerate_rashomon(train_ds, test_ds, spec);

    RashomonConfig cfg;
    cfg.epsilon = 0.05;
    cfg.score = ScoreSpec::penalized(0.01);
    cfg.n_models = 500;
    cfg.grid.depths = {1, 2};
    cfg.grid.criteria = {Criterion::gini, Criterion::entropy};
    cfg.grid.seeds.clear();
    for (std::uint64_t s = 0; s < 125; ++s) cfg.grid.seeds.push_back(s);
    cfg.strategy = Bootstrap{train_ds.rows() / 2};  // half-size bootstrap draws
    cfg.master_seed = 11;
    cfg.baseline.mode = BaselineSpec::Mode::external;
    cfg.baseline.external_model = ex.baseline.tree;
    const auto ad = build(train_ds, test_ds, cfg);

    const double a_ex = standard_ambiguity(conflict_profile(ex, test_ds));
    const double a_ad = standard_ambiguity(conflict_profile(ad, test_ds));
    detail = "exhaustive " + std::to_string(ex.size()) + " members A_0 " + fmt(a_ex) + ", ad-hoc " +
             std::to_string(ad.size()) + " members A_0 " + fmt(a_ad) + ", ratio " + fmt(a_ad / a_ex) +
             ", same threshold " + (ad.threshold == ex.threshold ? "yes" : "no");
    return ad.threshold == ex.threshold && a_ad <= a_ex && a_ad >= 0.6 * a_ex;
}

bool metric_properties(std::string& detail) {
    std::mt19937_64 rng(20240611);
    std::size_t cases = 0, broken = 0;
    std::string first;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok && broken++ == 0) first = what + " (case " + std::to_string(cases) + ")";
    };
    for (; cases < 1200; ++cases) {
        const std::size_t rows = 5 + rng() % 60;
        const bool binary = rng() % 2;
        const auto ds = binary ? fixtures::random_binary(rows, 2 + rng() % 5, rng()) : fixtures::random_mixed(rows, rng());

        // Three random sets drawn from one pool of trees.
        std::vector<ScoredModel> pool(1 + rng() % 12);
        for (auto& m : pool) {
            TreeParams p;
            p.max_depth = 1 + rng() % 4;
            p.criterion = rng() % 2 ? Criterion::gini : Criterion::entropy;
            p.seed = rng();
            m.tree = train(derive(ds, Bootstrap{rows}, rng()), p);
        }
        std::vector<RashomonSet> sets(3);
        for (auto& s : sets) {
            const std::size_t k = 1 + rng() % pool.size();
            for (std::size_t i = 0; i < k; ++i) s.members.push_back(pool[rng() % pool.size()]);
        }

        std::vector<ConflictProfile> ps;
        for (const auto& s : sets) {
            const auto p = conflict_profile(s, ds);
            expect(p == brute_force_metrics(s, ds), "brute force differs from profile");
            const auto m = predictions_matrix(s, ds);
            for (std::size_t x = 0; x < p.rows(); ++x) {
                const auto& r = p.records[x];
                const double c = p.conflict(x);
                expect(r.n0 + r.n1 == s.size(), "n0 + n1 != |R|");
                expect(c >= 0 && c <= 0.5, "conflict out of range");
                bool unanimous = true;
                for (std::size_t g = 1; g < m.models(); ++g) unanimous &= m.at(g, x) == m.at(0, x);
                expect((c == 0) == unanimous, "zero conflict without unanimity");
            }
            const auto curve = ambiguity_curve(p, default_delta_grid());
            for (std::size_t k = 1; k < curve.values.size(); ++k)
                expect(curve.values[k] <= curve.values[k - 1], "ambiguity increases in delta");
            expect(ambiguity(p, 0.5) == 0.0, "ambiguity at 0.5 is nonzero");
            ps.push_back(p);
        }
        for (std::size_t i = 0; i < 3; ++i) {
            expect(distance(ps[i], ps[i]) == 0.0, "nonzero self distance");
            for (std::size_t j = 0; j < 3; ++j) {
                expect(distance(ps[i], ps[j]) == distance(ps[j], ps[i]), "asymmetric distance");
                for (std::size_t k = 0; k < 3; ++k)
                    expect(distance(ps[i], ps[k]) <= distance(ps[i], ps[j]) + distance(ps[j], ps[k]) + 1e-12,
                           "triangle inequality");
            }
        }
    }
    detail = std::to_string(cases) + " cases, " + std::to_string(broken) + " violations" +
             (broken ? "; first: " + first : "");
    return broken == 0 && cases >= 1000;
}

bool uniform_distance(std::string& detail) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    const std::size_t scale = 1'000'000'000;
    auto draw = [&] {
        ConflictProfile p;
        p.set_size = scale;
        p.dataset_fingerprint = "uniform";
        for (std::size_t i = 0; i < 10000; ++i) {
            const auto m = static_cast<std::size_t>(std::llround(u(rng) * static_cast<double>(scale)));
            p.records.push_back({i, scale - m, m});
        }
        return p;
    };
    const auto a = draw(), b = draw();
    const double d = distance(a, b);
    detail = "distance " + fmt(d) + ", expected " + fmt(kUniformDistanceBaseline);
    return std::abs(d - kUniformDistanceBaseline) <= 0.01;
}

bool monotone_and_boundary(std::string& detail) {
    auto [train_ds, test_ds] = split(fixtures::random_mixed(800, 77), SplitSpec{0.75, 5, {}});
    RashomonConfig cfg;
    cfg.n_models = 120;
    cfg.strategy = Bootstrap{train_ds.rows()};
    cfg.master_seed = 9;
    auto ids = [&](double eps) {
        cfg.epsilon = eps;
        std::set<std::size_t> out;
        for (const auto& m : build(train_ds, test_ds, cfg).members)
            if (m.provenance.candidate_index) out.insert(*m.provenance.candidate_index);
        return out;
    };
    const auto e0 = ids(0.0), e5 = ids(0.05), e1 = ids(1.0);
    const bool nested = std::includes(e5.begin(), e5.end(), e0.begin(), e0.end()) &&
                        std::includes(e1.begin(), e1.end(), e5.begin(), e5.end());
    const bool all = e1.size() == cfg.n_models;

    cfg.epsilon = 0.1;
    const auto rs = build(train_ds, test_ds, cfg);
    RashomonSet grow;
    double prev = 0;
    bool appending_ok = true;
    for (const auto& m : rs.members) {
        grow.members.push_back(m);
        const double a = standard_ambiguity(conflict_profile(grow, test_ds));
        appending_ok &= a >= prev;
        prev = a;
    }
    detail = "members at eps 0/0.05/1: " + std::to_string(e0.size()) + "/" + std::to_string(e5.size()) + "/" +
             std::to_string(e1.size()) + " of " + std::to_string(cfg.n_models) + " candidates; nested " +
             (nested ? "yes" : "no") + "; appending " + std::to_string(rs.size()) + " members never lowered A_0 " +
             (appending_ok ? "yes" : "no");
    return nested && all && appending_ok;
}

std::string masked(const fs::path& p) {
    static const std::regex stamp(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)");
    return std::regex_replace(fixtures::read_text(p), stamp, "<time>");
}

bool deterministic_audit(std::string& detail) {
    const auto dir = fixtures::scratch("acceptance_determinism");
    auto j = synthetic_config(200, 12);
    j["output"] = {{"directory", "run"}};
    fixtures::write_text(dir / "config.json", j.dump(2));
    for (const char* run : {"one", "two"}) {
        const std::string cmd = std::string(MPAUDIT_CLI) + " audit --config " + (dir / "config.json").string() +
                                " --out " + (dir / run).string() + " > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            detail = "audit exited nonzero";
            return false;
        }
    }
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "one")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir / "one");
        ++files;
        if (!fs::exists(dir / "two" / rel) || masked(e.path()) != masked(dir / "two" / rel)) {
            detail = "differs: " + rel.string();
            return false;
        }
    }
    std::size_t files_two = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "two")) files_two += e.is_regular_file();
    detail = std::to_string(files) + " files identical after masking generated_at";
    return files > 0 && files == files_two;
}

bool small_set_sufficiency(std::string& detail) {
    // One 2200-cell grid, so the 200-model set is a prefix of the 2000-model one.
    const auto small = build_synthetic(synthetic_config(200, 100));
    const auto large = build_synthetic(synthetic_config(2000, 100));
    const auto cs = ambiguity_curve(conflict_profile(small.set, small.split.test), default_delta_grid());
    const auto cl = ambiguity_curve(conflict_profile(large.set, large.split.test), default_delta_grid());
    double worst = 0, at = 0;
    for (std::size_t k = 0; k < cs.values.size(); ++k) {
        const double gap = std::abs(cs.values[k] - cl.values[k]);
        if (gap > worst) worst = gap, at = cs.deltas[k];
    }
    std::ostringstream o;
    o << small.set.size() << " vs " << large.set.size() << " members; largest gap " << fmt(worst) << " at delta "
      << at;
    if (worst > 0.05) {
        o << "; gaps above 0.05 at delta";
        for (std::size_t k = 0; k < cs.values.size(); ++k)
            if (std::abs(cs.values[k] - cl.values[k]) > 0.05)
                o << ' ' << cs.deltas[k] << " (" << fmt(cs.values[k]) << " vs " << fmt(cl.values[k]) << ")";
    }
    detail = o.str();
    return worst <= 0.05;
}

bool enumeration_count_closed_form(std::string& detail) {
    bool ok = true;
    std::ostringstream o;
    for (std::size_t d : {2, 5, 8}) {
        const auto ds = fixtures::random_binary(50, d, d);
        EnumSpec spec;
        spec.max_depth = 1;
        spec.epsilon = 1.0;
        const auto rs = enumerate_rashomon(ds, ds, spec);
        const auto formula = enumeration_count(d, 1, true);
        ok &= rs.candidates_considered == 2 + 2 * d && formula == 2 + 2 * d;
        o << (d == 2 ? "" : ", ") << "d=" << d << ": " << rs.candidates_considered << " enumerated";
    }
    detail = o.str();
    return ok;
}

}  // namespace

int main() {
    criterion(1, "synthetic ground-truth recovery", ground_truth_recovery);
    criterion(2, "exhaustive set dominates the ad-hoc set", exhaustive_dominance);
    criterion(3, "metric properties on randomized sets", metric_properties);
    criterion(4, "uniform distance baseline", uniform_distance);
    criterion(5, "epsilon monotonicity and boundaries", monotone_and_boundary);
    criterion(6, "audit determinism", deterministic_audit);
    criterion(7, "200 models track 2000 models", small_set_sufficiency);
    criterion(8, "depth-1 enumeration count is 2 + 2d", enumeration_count_closed_form);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
