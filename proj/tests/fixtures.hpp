#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mpaudit/data/dataset.hpp"
#include "mpaudit/tree/decision_tree.hpp"

namespace fixtures {

using namespace mpaudit;

inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::path(MPAUDIT_TEST_TMP) / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// One numeric column "x" with the given values and labels.
inline Dataset line(std::vector<double> xs, std::vector<std::uint8_t> ys) {
    Schema s;
    s.columns = {{"x", ColumnKind::numeric, {}}};
    return Dataset(s, std::move(xs), std::move(ys));
}

/// Random binary features; the label is a noisy function of the first three.
inline Dataset random_binary(std::size_t rows, std::size_t features, std::uint64_t seed, double noise = 0.2) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution bit(0.5), flip(noise);
    Schema s;
    for (std::size_t j = 0; j < features; ++j) s.columns.push_back({"f" + std::to_string(j), ColumnKind::binary, {}});
    std::vector<double> v;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<int> x(features);
        for (auto& b : x) b = bit(rng);
        for (int b : x) v.push_back(b);
        int label = features >= 3 ? ((x[0] && x[1]) || x[2]) : x[0];
        if (flip(rng)) label = 1 - label;
        y.push_back(static_cast<std::uint8_t>(label));
    }
    return Dataset(s, std::move(v), std::move(y));
}

/// Mixed numeric / categorical data with a noisy threshold rule.
inline Dataset random_mixed(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    std::uniform_int_distribution<int> cat(0, 2);
    std::bernoulli_distribution flip(0.15);
    Schema s;
    s.columns = {{"a", ColumnKind::numeric, {}},
                 {"b", ColumnKind::numeric, {}},
                 {"c", ColumnKind::categorical, {"red", "green", "blue"}},
                 {"d", ColumnKind::binary, {}}};
    std::vector<double> v;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < rows; ++i) {
        const double a = g(rng), b = g(rng);
        const int c = cat(rng), d = cat(rng) == 0;
        v.insert(v.end(), {a, b, static_cast<double>(c), static_cast<double>(d)});
        int label = (a + 0.5 * b > 0) != (c == 2);
        if (flip(rng)) label = 1 - label;
        y.push_back(static_cast<std::uint8_t>(label));
    }
    return Dataset(s, std::move(v), std::move(y));
}

}  // namespace fixtures
