#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpaudit/audit/config.hpp"
#include "mpaudit/audit/report.hpp"
#include "mpaudit/core/error.hpp"
#include "mpaudit/data/csv.hpp"
#include "mpaudit/data/ingest.hpp"
#include "mpaudit/data/split.hpp"
#include "mpaudit/data/synthetic.hpp"
#include "mpaudit/metrics.hpp"
#include "mpaudit/multiplicity.hpp"
#include "mpaudit/oracle.hpp"
#include "mpaudit/persist.hpp"
#include "mpaudit/rashomon.hpp"

namespace mpaudit::audit {

namespace fs = std::filesystem;

struct LoadedData {
    Dataset dataset;
    std::string source;
    std::size_t rows_read = 0;
    std::size_t rows_removed = 0;
    std::string ingest_report;
};

inline LoadedData load_data(const RunConfig& cfg) {
    LoadedData out;
    if (const auto* syn = std::get_if<SyntheticSpec>(&cfg.source)) {
        out.dataset = generate_synthetic(*syn);
        out.source = "synthetic";
        out.rows_read = out.dataset.rows();
        return out;
    }
    const auto& c = std::get<CsvSource>(cfg.source);
    auto r = ingest_csv(c.path, c.options);
    out.source = "csv:" + fs::path(c.path).filename().string();
    out.rows_read = r.rows_read;
    out.rows_removed = r.rows_removed;
    out.ingest_report = r.report();
    out.dataset = std::move(r.dataset);
    return out;
}

/// Turns the declared strategy into a concrete one. A "remainder" pool for
/// fresh_resample is every row of `full` outside the test split.
inline MultiplicityStrategy resolve_strategy(const RunConfig& cfg, const SplitResult& split_result,
                                             const Dataset& full) {
    const auto& s = cfg.strategy;
    const std::size_t n_train = split_result.train.rows();
    if (s.type == "none") return NoMultiplicity{};
    if (s.type == "bootstrap") {
        std::size_t size = 0;
        if (s.sample_size) {
            size = *s.sample_size;
        } else {
            if (!(*s.sample_fraction > 0)) throw config_error("bootstrap sample_fraction must be > 0");
            size = static_cast<std::size_t>(std::llround(*s.sample_fraction * static_cast<double>(n_train)));
        }
        return Bootstrap{size};
    }
    if (s.type == "feature_subsample") return FeatureSubsample{s.keep};
    if (s.type == "feature_noise") return FeatureNoise{s.numeric_sigma, s.categorical_flip_prob, s.standardize};
    // fresh_resample
    std::shared_ptr<const Dataset> pool;
    if (s.synthetic_pool_points) {
        const auto* syn = std::get_if<SyntheticSpec>(&cfg.source);
        if (!syn) throw config_error("a synthetic resampling pool needs a synthetic data source");
        SyntheticSpec ps = *syn;
        ps.n_points = *s.synthetic_pool_points;
        ps.seed = derive_seed(syn->seed, 0x9001ULL);
        pool = std::make_shared<const Dataset>(generate_synthetic(ps));
    } else {
        pool = std::make_shared<const Dataset>(full.subset(split_result.non_test_idx()));
    }
    return FreshResample{std::move(pool), *s.sample_size};
}

inline DecisionTree load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open baseline model '" + path + "'");
    try {
        return tree_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed model file '" + path + "': " + e.what());
    }
}

/// Training-side transforms and tokens, for persisting with the set.
inline SetContext set_context(const RunConfig& cfg, const Schema& schema) {
    SetContext ctx;
    ctx.schema = schema;
    ctx.config_fingerprint = cfg.fingerprint;
    if (const auto* c = std::get_if<CsvSource>(&cfg.source)) {
        ctx.transforms = c->options.transforms;
        ctx.delimiter = c->options.delimiter;
        ctx.missing_tokens = c->options.missing_tokens;
    }
    return ctx;
}

struct AuditResult {
    AuditReport report;
    RashomonSet set;
    ConflictProfile profile;
    Dataset test;
    fs::path output_dir;
};

/// ingest/generate, split, build, profile, curve, report; writes report.json,
/// report.txt, profile.csv, curve.csv, test.csv and rashomon/.
inline AuditResult cmd_audit(const RunConfig& cfg, std::optional<fs::path> out_override = std::nullopt) {
    AuditResult res;
    res.output_dir = out_override ? *out_override : cfg.output_dir;

    auto data = load_data(cfg);
    auto sr = split_detailed(data.dataset, cfg.split);
    if (sr.train.empty() || sr.test.empty()) throw data_error("split left an empty train or test set");

    RashomonConfig rc = cfg.rashomon;
    rc.strategy = resolve_strategy(cfg, sr, data.dataset);
    if (cfg.external_baseline_path) rc.baseline.external_model = load_tree(*cfg.external_baseline_path);

    res.set = build(sr.train, sr.test, rc);
    const auto matrix = predictions_matrix(res.set, sr.test, rc.threads);
    res.profile = profile_from_matrix(matrix, sr.test);

    auto& r = res.report;
    r.config_fingerprint = cfg.fingerprint;
    r.generated_at = utc_timestamp();
    r.data_source = data.source;
    r.rows_read = data.rows_read;
    r.rows_removed = data.rows_removed;
    r.n_train = sr.train.rows();
    r.n_test = sr.test.rows();
    r.test_fingerprint = sr.test.fingerprint();
    r.strategy = res.set.strategy;
    r.epsilon = res.set.epsilon;
    r.score = res.set.score;
    r.baseline_source = res.set.baseline_source;
    r.baseline_score = res.set.baseline.score;
    r.threshold = res.set.threshold;
    r.members = res.set.size();
    r.candidates_considered = res.set.candidates_considered;
    r.all_candidates_rejected = res.set.all_candidates_rejected;
    r.scored_on = res.set.scored_on;
    r.flag_threshold = cfg.flag_threshold;
    r.standard_ambiguity = standard_ambiguity(res.profile);
    r.curve = ambiguity_curve(res.profile, cfg.deltas);
    if (sr.test.tags()) r.ground_truth_distance = distance(res.profile, synthetic_ground_truth(sr.test));
    r.flagged = flag_rows(res.profile, matrix, cfg.flag_threshold);

    const auto& dir = res.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    const auto j = to_json(r);
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw runtime_error("output directory '" + dir.string() + "' is not writable");
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "report.txt", std::ios::binary);
        out << render_summary(j);
    }
    write_profile_csv(res.profile, (dir / "profile.csv").string());
    write_curve_csv(r.curve, (dir / "curve.csv").string());
    write_canonical(sr.test, (dir / "test.csv").string());
    if (cfg.write_rashomon) save_rashomon(res.set, set_context(cfg, sr.test.schema()), dir / "rashomon");
    res.test = std::move(sr.test);
    return res;
}

/// Reads rows to score: a canonical export (sidecar present) or raw text
/// preprocessed the way the set's training data was. Labels are optional.
inline Dataset load_rows_for(const SetContext& ctx, const std::string& path) {
    if (fs::exists(path + ".schema.json")) {
        auto ds = read_canonical(path);
        for (std::size_t j = 0; j < ctx.schema.columns.size(); ++j) {
            const auto& want = ctx.schema.columns[j];
            const auto k = ds.schema().find(want.name);
            if (!k || !(ds.column(*k) == want))
                throw data_error("feature mismatch: column '" + want.name + "'");
        }
        return ds;
    }
    auto table = csv::read(path, ctx.delimiter);
    IngestOptions opt;
    opt.delimiter = ctx.delimiter;
    opt.label = ctx.schema.label;
    opt.transforms = ctx.transforms;
    opt.missing_tokens = ctx.missing_tokens;
    opt.fixed_schema = ctx.schema;
    opt.label_required = false;
    if (std::find(table.header.begin(), table.header.end(), kRowIdColumn) != table.header.end())
        opt.id_column = kRowIdColumn;
    return ingest_table(std::move(table), opt).dataset;
}

struct ScoreResult {
    ConflictProfile profile;
    std::size_t flagged = 0;
};

/// Conflict ratio per row under a persisted set; writes
/// row_id,n0,n1,conflict,flagged.
inline ScoreResult cmd_score(const fs::path& set_dir, const std::string& data_path, double delta_star,
                             const fs::path& out_csv, unsigned threads = 0) {
    const Delta d(delta_star);
    const auto loaded = load_rashomon(set_dir);
    const auto ds = load_rows_for(loaded.context, data_path);
    ScoreResult res;
    res.profile = conflict_profile(loaded.set, ds, threads);
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw runtime_error("cannot write '" + out_csv.string() + "'");
    out << "row_id,n0,n1,conflict,flagged\n";
    for (std::size_t i = 0; i < res.profile.rows(); ++i) {
        const auto& rec = res.profile.records[i];
        const bool flag = d.exceeded_by(rec.minority(), res.profile.set_size);
        res.flagged += flag;
        out << rec.row_id << ',' << rec.n0 << ',' << rec.n1 << ',' << csv::format_double(res.profile.conflict(i))
            << ',' << (flag ? 1 : 0) << '\n';
    }
    return res;
}

struct CompareResult {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> distances;
    std::vector<AmbiguityCurve> curves;
};

/// Pairwise conflict-ratio distances on one shared dataset; writes
/// distances.csv, curve_<k>.csv per set and compare.txt.
inline CompareResult cmd_compare(const std::vector<fs::path>& set_dirs, const std::string& data_path,
                                 const fs::path& out_dir, unsigned threads = 0) {
    if (set_dirs.size() < 2) throw config_error("compare needs at least two Rashomon sets");
    std::vector<LoadedSet> sets;
    for (const auto& d : set_dirs) sets.push_back(load_rashomon(d));
    const auto ds = load_rows_for(sets.front().context, data_path);

    CompareResult res;
    std::vector<ConflictProfile> profiles;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        try {
            profiles.push_back(conflict_profile(sets[k].set, ds, threads));
        } catch (const Error& e) {
            throw data_error("set '" + set_dirs[k].string() + "' does not fit the data: " + e.what());
        }
        res.labels.push_back(set_dirs[k].string());
        res.curves.push_back(ambiguity_curve(profiles.back(), default_delta_grid()));
    }
    const std::size_t n = sets.size();
    res.distances.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            res.distances[a][b] = res.distances[b][a] = distance(profiles[a], profiles[b]);

    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "distances.csv", std::ios::binary);
        if (!out) throw runtime_error("cannot write into '" + out_dir.string() + "'");
        std::vector<std::string> header{"set"};
        header.insert(header.end(), res.labels.begin(), res.labels.end());
        csv::write_record(out, header, ',');
        for (std::size_t a = 0; a < n; ++a) {
            std::vector<std::string> rec{res.labels[a]};
            for (std::size_t b = 0; b < n; ++b) rec.push_back(csv::format_double(res.distances[a][b]));
            csv::write_record(out, rec, ',');
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        write_curve_csv(res.curves[k], (out_dir / ("curve_" + std::to_string(k + 1) + ".csv")).string());

    std::ofstream note(out_dir / "compare.txt", std::ios::binary);
    note << "Conflict-ratio distances on " << ds.rows() << " rows. Two sets whose conflicts were\n"
         << "independent and uniform on [0, 0.5] would sit at 1/6 (" << csv::format_double(kUniformDistanceBaseline)
         << ").\n\n";
    for (std::size_t k = 0; k < n; ++k) note << "curve_" << k + 1 << ".csv: " << res.labels[k] << '\n';
    note << '\n';
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double d = res.distances[a][b];
            note << res.labels[a] << " vs " << res.labels[b] << ": " << csv::format_double(d) << " ("
                 << (d < kUniformDistanceBaseline ? "closer than" : "no closer than")
                 << " the uniform baseline)\n";
        }
    return res;
}

struct ProbeRow {
    std::size_t size = 0;
    double best_cv_accuracy = 0;
};

/// Best cross-validated accuracy over the grid's (depth, criterion) pairs on
/// random training subsets of each size, averaged over `repeats` draws.
inline std::vector<ProbeRow> cmd_sample_size_probe(const RunConfig& cfg, const std::vector<std::size_t>& sizes,
                                                   std::size_t repeats = 3,
                                                   std::optional<fs::path> out_csv = std::nullopt) {
    if (sizes.empty()) throw config_error("sizes list is empty");
    if (repeats < 1) throw config_error("repeats must be >= 1");
    const auto data = load_data(cfg);
    const auto sr = split_detailed(data.dataset, cfg.split);
    const auto& pool = sr.train;
    for (auto s : sizes)
        if (s > pool.rows() || s < 2)
            throw data_error("sample size " + std::to_string(s) + " outside [2, " + std::to_string(pool.rows()) +
                             "] training rows");
    const auto params = mpaudit::detail::baseline_candidates(cfg.rashomon.grid);
    const std::size_t folds = std::max<std::size_t>(2, cfg.rashomon.baseline.folds);
    std::vector<ProbeRow> rows;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        double total = 0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const auto seed = derive_seed(cfg.rashomon.master_seed, 0x9b0be000ULL + si * 1000 + rep);
            auto order = shuffled_indices(pool.rows(), seed);
            order.resize(sizes[si]);
            const auto sub = pool.subset(order);
            std::vector<double> acc(params.size());
            parallel_for(params.size(), cfg.rashomon.threads, [&](std::size_t i) {
                acc[i] = mpaudit::detail::cv_score(sub, params[i], ScoreSpec::accuracy(), folds, derive_seed(seed, 1));
            });
            total += *std::max_element(acc.begin(), acc.end());
        }
        rows.push_back({sizes[si], total / static_cast<double>(repeats)});
    }
    if (out_csv) {
        if (out_csv->has_parent_path()) fs::create_directories(out_csv->parent_path());
        std::ofstream out(*out_csv, std::ios::binary);
        if (!out) throw runtime_error("cannot write '" + out_csv->string() + "'");
        out << "size,best_cv_accuracy\n";
        for (const auto& r : rows) out << r.size << ',' << csv::format_double(r.best_cv_accuracy) << '\n';
    }
    return rows;
}

}  // namespace mpaudit::audit
