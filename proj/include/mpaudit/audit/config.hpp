#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/hash.hpp"
#include "mpaudit/data/ingest.hpp"
#include "mpaudit/data/split.hpp"
#include "mpaudit/data/synthetic.hpp"
#include "mpaudit/metrics.hpp"
#include "mpaudit/persist.hpp"
#include "mpaudit/rashomon.hpp"
#include "mpaudit/version.hpp"

namespace mpaudit::audit {

inline constexpr int kConfigVersion = 1;

struct CsvSource {
    std::string path;
    IngestOptions options;
};

using DataSource = std::variant<SyntheticSpec, CsvSource>;

/// Strategy as declared; sizes and pools are resolved once data is split.
struct StrategyDecl {
    std::string type = "none";
    std::optional<std::size_t> sample_size;
    std::optional<double> sample_fraction;
    std::size_t keep = 0;
    double numeric_sigma = 0.0;
    double categorical_flip_prob = 0.0;
    bool standardize = true;
    /// fresh_resample: draw from every non-test row ("remainder"), or from a
    /// freshly generated synthetic pool of this many points.
    std::optional<std::size_t> synthetic_pool_points;
};

struct RunConfig {
    nlohmann::json raw;
    std::string fingerprint;
    std::filesystem::path base_dir;

    DataSource source;
    SplitSpec split;
    RashomonConfig rashomon;
    StrategyDecl strategy;
    std::optional<std::string> external_baseline_path;

    std::vector<double> deltas = default_delta_grid();
    double flag_threshold = 0.3;

    std::filesystem::path output_dir = "audit_out";
    bool write_rashomon = true;
};

namespace detail {

inline std::size_t count_field(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw config_error(std::string("'") + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

inline SyntheticSpec parse_synthetic(const nlohmann::json& j) {
    SyntheticSpec s;
    s.n_points = count_field(j, "n_points");
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("components")) {
        s.components.clear();
        for (const auto& jc : j.at("components")) {
            GaussianComponent c;
            const auto mean = jc.at("mean").get<std::vector<double>>();
            const auto sd = jc.value("stddev", std::vector<double>{1.0, 1.0});
            if (mean.size() != 2 || sd.size() != 2) throw config_error("components are 2-dimensional");
            c.mean = {mean[0], mean[1]};
            c.stddev = {sd[0], sd[1]};
            c.label = jc.at("label").get<std::uint8_t>();
            c.weight = jc.at("weight").get<double>();
            s.components.push_back(c);
        }
    }
    validate(s);
    return s;
}

inline CsvSource parse_csv(const nlohmann::json& j, const std::filesystem::path& base) {
    CsvSource s;
    std::filesystem::path p = j.at("path").get<std::string>();
    s.path = (p.is_absolute() ? p : base / p).string();
    auto& o = s.options;
    const auto delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw config_error("delimiter must be a single character");
    o.delimiter = delim[0];
    o.label = j.at("label").get<std::string>();
    if (j.contains("columns"))
        for (const auto& [name, kind] : j.at("columns").items()) o.kinds[name] = parse_column_kind(kind.get<std::string>());
    if (j.contains("transforms")) o.transforms = transforms_from_json(j.at("transforms"));
    if (j.contains("missing_tokens")) o.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
    if (j.contains("id_column")) o.id_column = j.at("id_column").get<std::string>();
    return s;
}

inline StrategyDecl parse_strategy(const nlohmann::json& j) {
    StrategyDecl s;
    s.type = j.at("type").get<std::string>();
    if (s.type == "none") {
    } else if (s.type == "bootstrap") {
        if (j.contains("sample_size")) s.sample_size = count_field(j, "sample_size");
        if (j.contains("sample_fraction")) s.sample_fraction = j.at("sample_fraction").get<double>();
        if (!s.sample_size && !s.sample_fraction)
            throw config_error("bootstrap needs sample_size or sample_fraction");
    } else if (s.type == "feature_subsample") {
        s.keep = count_field(j, "keep");
    } else if (s.type == "feature_noise") {
        s.numeric_sigma = j.value("numeric_sigma", 0.0);
        s.categorical_flip_prob = j.value("categorical_flip_prob", 0.0);
        s.standardize = j.value("standardize", true);
    } else if (s.type == "fresh_resample") {
        s.sample_size = count_field(j, "sample_size");
        const auto& pool = j.value("pool", nlohmann::json("remainder"));
        if (pool.is_object())
            s.synthetic_pool_points = count_field(pool, "synthetic_points");
        else if (pool != "remainder")
            throw config_error("fresh_resample pool must be \"remainder\" or {\"synthetic_points\": N}");
    } else {
        throw config_error("unknown multiplicity strategy '" + s.type + "'");
    }
    return s;
}

inline ParamGrid parse_grid(const nlohmann::json& j) {
    ParamGrid g = default_grid();
    if (j.contains("depths")) g.depths = j.at("depths").get<std::vector<std::size_t>>();
    if (j.contains("criteria")) {
        g.criteria.clear();
        for (const auto& c : j.at("criteria")) g.criteria.push_back(parse_criterion(c.get<std::string>()));
    }
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        if (s.is_number_integer()) {
            g.seeds.clear();
            for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) g.seeds.push_back(i);
        } else {
            g.seeds = s.get<std::vector<std::uint64_t>>();
        }
    }
    g.min_samples_split = j.value("min_samples_split", std::size_t{2});
    g.validate();
    return g;
}

inline void parse_rashomon(const nlohmann::json& j, RunConfig& cfg) {
    auto& r = cfg.rashomon;
    if (j.contains("epsilon") == j.contains("epsilon_preset"))
        throw config_error("set exactly one of 'epsilon' or 'epsilon_preset'");
    r.epsilon = j.contains("epsilon") ? j.at("epsilon").get<double>()
                                      : epsilon_preset(j.at("epsilon_preset").get<std::string>());
    if (j.contains("score")) {
        const auto& s = j.at("score");
        if (s.is_string() && s == "accuracy")
            r.score = ScoreSpec::accuracy();
        else if (s.is_object() && s.contains("penalized"))
            r.score = ScoreSpec::penalized(s.at("penalized").get<double>());
        else
            throw config_error("score must be \"accuracy\" or {\"penalized\": lambda}");
    }
    r.n_models = count_field(j, "n_models");
    if (j.contains("grid")) r.grid = parse_grid(j.at("grid"));
    cfg.strategy = parse_strategy(j.value("strategy", nlohmann::json{{"type", "none"}}));
    r.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        const auto mode = b.at("mode").get<std::string>();
        if (mode == "cross_validation") {
            r.baseline.mode = BaselineSpec::Mode::cross_validation;
            r.baseline.folds = b.value("folds", std::size_t{5});
        } else if (mode == "grid_best") {
            r.baseline.mode = BaselineSpec::Mode::grid_best;
        } else if (mode == "external") {
            r.baseline.mode = BaselineSpec::Mode::external;
            std::filesystem::path p = b.at("model").get<std::string>();
            cfg.external_baseline_path = (p.is_absolute() ? p : cfg.base_dir / p).string();
        } else {
            throw config_error("unknown baseline mode '" + mode + "'");
        }
    }
    r.validation_fraction = j.value("validation_fraction", 0.0);
    r.threads = j.value("threads", 0u);
}

}  // namespace detail

/// Hash of the canonical (key-sorted) config plus the toolkit version.
inline std::string config_fingerprint(const nlohmann::json& raw) {
    return Fnv1a().str(raw.dump()).str(kToolkitVersion).hex();
}

/// Parses a config document. `base_dir` resolves relative paths.
inline RunConfig parse_config(const nlohmann::json& raw, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    cfg.raw = raw;
    cfg.base_dir = base_dir;
    try {
        if (raw.value("version", 0) != kConfigVersion)
            throw config_error("config 'version' must be " + std::to_string(kConfigVersion));
        const auto& data = raw.at("data");
        if (data.contains("synthetic") == data.contains("csv"))
            throw config_error("data must have exactly one of 'synthetic' or 'csv'");
        if (data.contains("synthetic"))
            cfg.source = detail::parse_synthetic(data.at("synthetic"));
        else
            cfg.source = detail::parse_csv(data.at("csv"), base_dir);

        if (raw.contains("split")) {
            const auto& s = raw.at("split");
            cfg.split.train_fraction = s.value("train_fraction", 0.8);
            cfg.split.seed = s.value("seed", std::uint64_t{0});
            if (s.contains("fixed_sizes")) {
                const auto v = s.at("fixed_sizes").get<std::vector<std::size_t>>();
                if (v.size() != 2) throw config_error("fixed_sizes must be [n_train, n_test]");
                cfg.split.fixed_sizes = std::make_pair(v[0], v[1]);
            }
        }
        detail::parse_rashomon(raw.at("rashomon"), cfg);

        if (raw.contains("metrics")) {
            const auto& m = raw.at("metrics");
            if (m.contains("deltas")) cfg.deltas = m.at("deltas").get<std::vector<double>>();
            cfg.flag_threshold = m.value("flag_threshold", 0.3);
        }
        for (double d : cfg.deltas)
            if (!(d >= 0 && d <= 0.5)) throw config_error("deltas must lie in [0, 0.5]");
        if (!(cfg.flag_threshold >= 0 && cfg.flag_threshold <= 0.5))
            throw config_error("flag_threshold must lie in [0, 0.5]");

        if (raw.contains("output")) {
            const auto& o = raw.at("output");
            if (o.contains("directory")) {
                std::filesystem::path p = o.at("directory").get<std::string>();
                cfg.output_dir = p.is_absolute() ? p : base_dir / p;
            }
            cfg.write_rashomon = o.value("write_rashomon", true);
        } else {
            cfg.output_dir = base_dir / cfg.output_dir;
        }
        // The external model is loaded later, so validate a copy without that check.
        auto probe = cfg.rashomon;
        if (probe.baseline.mode == BaselineSpec::Mode::external) probe.baseline.mode = BaselineSpec::Mode::grid_best;
        probe.validate();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("invalid config: ") + e.what());
    }
    cfg.fingerprint = config_fingerprint(raw);
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path.string() + "'");
    nlohmann::json raw;
    try {
        raw = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    if (seed_override) {
        if (!raw.contains("rashomon")) throw config_error("config has no 'rashomon' section");
        raw["rashomon"]["master_seed"] = *seed_override;
    }
    return parse_config(raw, path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace mpaudit::audit
