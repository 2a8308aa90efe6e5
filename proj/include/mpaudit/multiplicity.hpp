#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/random.hpp"
#include "mpaudit/data/dataset.hpp"

namespace mpaudit {

// Dataset multiplicity strategies: each derives one training variant per model.

struct NoMultiplicity {};

/// Rows drawn with replacement.
struct Bootstrap {
    std::size_t sample_size = 0;
};

/// Each model sees `keep` uniformly chosen feature columns.
struct FeatureSubsample {
    std::size_t keep = 0;
};

/// Gaussian noise on numeric/ordinal columns; category switches elsewhere.
struct FeatureNoise {
    double numeric_sigma = 0.0;
    double categorical_flip_prob = 0.0;
    /// Scale sigma by each column's standard deviation (z-score space).
    bool standardize = true;
};

/// A fresh training sample drawn without replacement from a larger pool.
struct FreshResample {
    std::shared_ptr<const Dataset> pool;
    std::size_t sample_size = 0;
};

using MultiplicityStrategy =
    std::variant<NoMultiplicity, Bootstrap, FeatureSubsample, FeatureNoise, FreshResample>;

inline std::string strategy_name(const MultiplicityStrategy& s) {
    static constexpr const char* names[] = {"none", "bootstrap", "feature_subsample", "feature_noise",
                                            "fresh_resample"};
    return names[s.index()];
}

inline void validate_strategy(const MultiplicityStrategy& strategy, const Dataset& base) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Bootstrap>) {
                if (s.sample_size < 1) throw config_error("bootstrap sample_size must be >= 1");
                if (base.empty()) throw data_error("bootstrap on an empty dataset");
            } else if constexpr (std::is_same_v<T, FeatureSubsample>) {
                if (s.keep < 1 || s.keep > base.cols())
                    throw config_error("feature_subsample keep=" + std::to_string(s.keep) +
                                       " outside [1, " + std::to_string(base.cols()) + "]");
            } else if constexpr (std::is_same_v<T, FeatureNoise>) {
                if (!(s.numeric_sigma >= 0)) throw config_error("feature_noise sigma must be >= 0");
                if (!(s.categorical_flip_prob >= 0 && s.categorical_flip_prob <= 1))
                    throw config_error("feature_noise flip probability must lie in [0,1]");
            } else if constexpr (std::is_same_v<T, FreshResample>) {
                if (!s.pool) throw config_error("fresh_resample requires a pool dataset");
                if (s.sample_size < 1) throw config_error("fresh_resample sample_size must be >= 1");
                if (s.pool->rows() < s.sample_size)
                    throw config_error("fresh_resample pool of " + std::to_string(s.pool->rows()) +
                                       " rows is smaller than sample_size " +
                                       std::to_string(s.sample_size));
                if (!(s.pool->schema() == base.schema()))
                    throw data_error("fresh_resample pool schema does not match the training data");
            }
        },
        strategy);
}

namespace detail {

inline Dataset apply_noise(const Dataset& base, const FeatureNoise& s, std::uint64_t seed) {
    const std::size_t n = base.rows(), d = base.cols();
    std::vector<double> values(base.values().begin(), base.values().end());
    std::vector<double> scale(d, 1.0);
    if (s.standardize) {
        for (std::size_t j = 0; j < d; ++j) {
            if (!is_threshold_kind(base.column(j).kind) || n == 0) continue;
            double mean = 0;
            for (std::size_t i = 0; i < n; ++i) mean += base.at(i, j);
            mean /= static_cast<double>(n);
            double var = 0;
            for (std::size_t i = 0; i < n; ++i) var += (base.at(i, j) - mean) * (base.at(i, j) - mean);
            scale[j] = std::sqrt(var / static_cast<double>(n));
        }
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const auto& col = base.column(j);
            double& x = values[i * d + j];
            if (is_threshold_kind(col.kind)) {
                if (s.numeric_sigma > 0) x += s.numeric_sigma * scale[j] * normal(rng);
            } else if (s.categorical_flip_prob > 0 && unit(rng) < s.categorical_flip_prob) {
                const std::size_t k = col.kind == ColumnKind::binary ? 2 : col.categories.size();
                if (k < 2) continue;
                // Uniform over the k-1 other categories.
                std::uniform_int_distribution<std::size_t> other(0, k - 2);
                std::size_t c = other(rng);
                if (c >= static_cast<std::size_t>(x)) ++c;
                x = static_cast<double>(c);
            }
        }
    }
    return base.with_values(std::move(values));
}

// Floyd's algorithm: k distinct indices from [0, n) in O(k).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(k * 2);
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t j = n - k; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        const std::size_t v = chosen.insert(t).second ? t : (chosen.insert(j), j);
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// One training variant of `base`; a pure function of (base, strategy, seed).
/// Labels are never altered.
inline Dataset derive(const Dataset& base, const MultiplicityStrategy& strategy, std::uint64_t seed) {
    validate_strategy(strategy, base);
    return std::visit(
        [&](const auto& s) -> Dataset {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NoMultiplicity>) {
                return base;
            } else if constexpr (std::is_same_v<T, Bootstrap>) {
                Rng rng(seed);
                std::uniform_int_distribution<std::size_t> pick(0, base.rows() - 1);
                std::vector<std::size_t> idx(s.sample_size);
                for (auto& i : idx) i = pick(rng);
                return base.subset(idx);
            } else if constexpr (std::is_same_v<T, FeatureSubsample>) {
                auto order = shuffled_indices(base.cols(), seed);
                order.resize(s.keep);
                std::sort(order.begin(), order.end());
                return base.select_columns(order);
            } else if constexpr (std::is_same_v<T, FeatureNoise>) {
                return detail::apply_noise(base, s, seed);
            } else {
                Rng rng(seed);
                const auto idx = detail::sample_without_replacement(s.pool->rows(), s.sample_size, rng);
                return s.pool->subset(idx);
            }
        },
        strategy);
}

/// Per-model data seeds: pairwise distinct and stable for a master seed.
inline std::vector<std::uint64_t> derivation_plan(const MultiplicityStrategy& strategy,
                                                  std::size_t n_models, std::uint64_t master_seed) {
    if (n_models < 1) throw config_error("n_models must be >= 1");
    const std::uint64_t base = derive_seed(master_seed, 0x5eed0000ULL + strategy.index());
    std::vector<std::uint64_t> seeds(n_models);
    // mix64 is a bijection, so distinct inputs give distinct seeds.
    for (std::size_t i = 0; i < n_models; ++i) seeds[i] = mix64(base + i);
    return seeds;
}

}  // namespace mpaudit
