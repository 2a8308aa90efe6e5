#pragma once

#include <cstdint>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/random.hpp"
#include "mpaudit/tree/decision_tree.hpp"

namespace mpaudit {

/// Hyperparameter grid for parametric multiplicity: depth x criterion x seed.
struct ParamGrid {
    std::vector<std::size_t> depths;
    std::vector<Criterion> criteria;
    std::vector<std::uint64_t> seeds;
    std::size_t min_samples_split = 2;

    std::size_t size() const { return depths.size() * criteria.size() * seeds.size(); }

    void validate() const {
        if (depths.empty() || criteria.empty() || seeds.empty())
            throw config_error("parameter grid has an empty axis");
        for (auto d : depths)
            if (d < 1) throw config_error("grid depth must be >= 1");
    }

    /// Cells are ordered depth-major, then criterion, then seed.
    TreeParams cell(std::size_t i) const {
        TreeParams p;
        p.seed = seeds[i % seeds.size()];
        i /= seeds.size();
        p.criterion = criteria[i % criteria.size()];
        p.max_depth = depths[i / criteria.size()];
        p.min_samples_split = min_samples_split;
        return p;
    }

    friend bool operator==(const ParamGrid&, const ParamGrid&) = default;
};

/// Depths 2-12, both criteria, 12 seeds: 264 cells.
inline ParamGrid default_grid() {
    ParamGrid g;
    for (std::size_t d = 2; d <= 12; ++d) g.depths.push_back(d);
    g.criteria = {Criterion::gini, Criterion::entropy};
    for (std::uint64_t s = 0; s < 12; ++s) g.seeds.push_back(s);
    return g;
}

/// n distinct cells, uniformly without replacement.
inline std::vector<TreeParams> sample_grid(const ParamGrid& grid, std::size_t n, std::uint64_t master_seed) {
    grid.validate();
    if (n < 1) throw config_error("must sample at least one grid cell");
    if (n > grid.size())
        throw config_error("requested " + std::to_string(n) + " models but the parameter grid has only " +
                           std::to_string(grid.size()) + " cells");
    const auto order = shuffled_indices(grid.size(), derive_seed(master_seed, 0x96d1ULL));
    std::vector<TreeParams> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(grid.cell(order[i]));
    return out;
}

}  // namespace mpaudit
