#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mpaudit/core/random.hpp"
#include "mpaudit/data/dataset.hpp"

namespace mpaudit {

/// Axis-aligned 2D Gaussian with a fixed label.
struct GaussianComponent {
    std::array<double, 2> mean{};
    std::array<double, 2> stddev{1.0, 1.0};
    std::uint8_t label = 0;
    double weight = 0.25;

    friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

/// Default mixture: two unit Gaussians at (5,5) with opposite labels overlap
/// completely, flanked by a label-0 Gaussian at (0,0) and a label-1 Gaussian
/// at (10,10). Equal weights put half the mass in the overlap.
inline std::vector<GaussianComponent> default_mixture() {
    return {
        {{0.0, 0.0}, {1.0, 1.0}, 0, 0.25},
        {{5.0, 5.0}, {1.0, 1.0}, 0, 0.25},
        {{5.0, 5.0}, {1.0, 1.0}, 1, 0.25},
        {{10.0, 10.0}, {1.0, 1.0}, 1, 0.25},
    };
}

struct SyntheticSpec {
    std::size_t n_points = 8000;
    std::uint64_t seed = 0;
    std::vector<GaussianComponent> components = default_mixture();
};

inline void validate(const SyntheticSpec& spec) {
    if (spec.components.empty()) throw config_error("synthetic spec has no components");
    double total = 0;
    for (const auto& c : spec.components) {
        if (!(c.weight >= 0)) throw config_error("synthetic component weight must be >= 0");
        if (c.label > 1) throw config_error("synthetic component label must be 0 or 1");
        for (double s : c.stddev)
            if (!(s >= 0)) throw config_error("synthetic component stddev must be >= 0");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw config_error("synthetic component weights must sum to 1");
}

/// Conflict ratio a component's rows carry by construction: components sharing
/// mean and stddev are indistinguishable, so the minority label's share of
/// their combined weight is the irreducible disagreement.
inline std::vector<double> component_ground_truth(const std::vector<GaussianComponent>& comps) {
    std::vector<double> gt(comps.size(), 0.0);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        double w[2] = {0.0, 0.0};
        for (const auto& c : comps)
            if (c.mean == comps[i].mean && c.stddev == comps[i].stddev) w[c.label] += c.weight;
        const double total = w[0] + w[1];
        gt[i] = total > 0 ? std::min(w[0], w[1]) / total : 0.0;
    }
    return gt;
}

inline Schema synthetic_schema() {
    Schema s;
    s.label = "label";
    s.columns = {{"x1", ColumnKind::numeric, {}}, {"x2", ColumnKind::numeric, {}}};
    return s;
}

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    std::vector<double> weights;
    for (const auto& c : spec.components) weights.push_back(c.weight);
    const auto gt = component_ground_truth(spec.components);

    Rng rng(spec.seed);
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> values;
    values.reserve(spec.n_points * 2);
    std::vector<std::uint8_t> labels;
    labels.reserve(spec.n_points);
    SyntheticTags tags;
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const int k = pick(rng);
        const auto& c = spec.components[static_cast<std::size_t>(k)];
        for (int a = 0; a < 2; ++a) values.push_back(c.mean[a] + c.stddev[a] * normal(rng));
        labels.push_back(c.label);
        tags.component.push_back(k);
        tags.ground_truth.push_back(gt[static_cast<std::size_t>(k)]);
    }
    return Dataset(synthetic_schema(), std::move(values), std::move(labels), {}, std::move(tags));
}

}  // namespace mpaudit
