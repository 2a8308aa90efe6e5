#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mpaudit/core/random.hpp"
#include "mpaudit/data/dataset.hpp"

namespace mpaudit {

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    /// (n_train, n_test); rows beyond their sum are left unused.
    std::optional<std::pair<std::size_t, std::size_t>> fixed_sizes;
};

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> unused_idx;

    /// Every row outside the test split (train plus unused), in index order.
    std::vector<std::size_t> non_test_idx() const {
        std::vector<std::size_t> out(train_idx);
        out.insert(out.end(), unused_idx.begin(), unused_idx.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, const SplitSpec& spec) {
    if (spec.fixed_sizes) {
        auto [a, b] = *spec.fixed_sizes;
        if (a + b > n)
            throw config_error("fixed split sizes (" + std::to_string(a) + ", " + std::to_string(b) +
                               ") exceed " + std::to_string(n) + " rows");
        return {a, b};
    }
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw config_error("train_fraction must lie in (0,1)");
    const auto a = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    return {a, n - a};
}

/// Seeded shuffle, then the first n_train rows train and the next n_test test.
inline SplitResult split_detailed(const Dataset& ds, const SplitSpec& spec) {
    const auto [n_train, n_test] = split_sizes(ds.rows(), spec);
    const auto order = shuffled_indices(ds.rows(), spec.seed);
    SplitResult r;
    r.train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    r.test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
    r.unused_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test), order.end());
    r.train = ds.subset(r.train_idx);
    r.test = ds.subset(r.test_idx);
    return r;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    auto r = split_detailed(ds, spec);
    return {std::move(r.train), std::move(r.test)};
}

}  // namespace mpaudit
