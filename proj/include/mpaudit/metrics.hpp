#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/data/csv.hpp"
#include "mpaudit/data/dataset.hpp"
#include "mpaudit/rashomon.hpp"

namespace mpaudit {

struct ConflictRecord {
    std::uint64_t row_id = 0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;

    std::size_t minority() const noexcept { return std::min(n0, n1); }
    friend bool operator==(const ConflictRecord&, const ConflictRecord&) = default;
};

/// Per-row vote counts over a Rashomon set. Conflicts are kept as exact
/// ratios min(n0, n1) / |R| and only turned into doubles on output.
struct ConflictProfile {
    std::vector<ConflictRecord> records;
    std::size_t set_size = 0;
    std::string dataset_fingerprint;
    /// False for ground-truth profiles, whose counts only encode a ratio.
    bool counts_applicable = true;

    std::size_t rows() const noexcept { return records.size(); }
    double conflict(std::size_t i) const {
        return static_cast<double>(records[i].minority()) / static_cast<double>(set_size);
    }
    std::vector<double> conflicts() const {
        std::vector<double> out(rows());
        for (std::size_t i = 0; i < rows(); ++i) out[i] = conflict(i);
        return out;
    }

    friend bool operator==(const ConflictProfile&, const ConflictProfile&) = default;
};

/// A conflict threshold held as an exact fraction of 10^9, so that a
/// decimal delta such as 0.3 compares exactly against 3/10.
class Delta {
public:
    static constexpr std::int64_t kScale = 1'000'000'000;

    explicit Delta(double d) : num_(std::llround(d * static_cast<double>(kScale))) {
        if (!(d >= 0.0 && d <= 0.5)) throw config_error("delta must lie in [0, 0.5]");
    }
    double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(kScale); }

    /// minority / set_size > delta, evaluated in integers.
    bool exceeded_by(std::size_t minority, std::size_t set_size) const noexcept {
        return static_cast<__int128>(minority) * kScale > static_cast<__int128>(num_) * set_size;
    }

private:
    std::int64_t num_;
};

inline ConflictProfile profile_from_matrix(const PredictionMatrix& m, const Dataset& ds) {
    if (m.models() < 1) throw data_error("conflict ratio needs at least one model");
    ConflictProfile p;
    p.set_size = m.models();
    p.dataset_fingerprint = ds.fingerprint();
    p.records.resize(ds.rows());
    for (std::size_t x = 0; x < ds.rows(); ++x) {
        const std::size_t n1 = m.positive_votes(x);
        p.records[x] = {ds.row_id(x), m.models() - n1, n1};
    }
    return p;
}

/// Conflict ratio of every row of `ds` under the set's members. Labels are
/// not used, so unlabelled rows work too.
inline ConflictProfile conflict_profile(const RashomonSet& rs, const Dataset& ds, unsigned threads = 0) {
    if (rs.members.empty()) throw data_error("conflict ratio needs at least one model");
    return profile_from_matrix(predictions_matrix(rs, ds, threads), ds);
}

/// Fraction of rows whose conflict ratio is strictly greater than delta.
inline double ambiguity(const ConflictProfile& p, double delta) {
    if (p.records.empty()) throw data_error("ambiguity of an empty profile");
    const Delta d(delta);
    std::size_t hits = 0;
    for (const auto& r : p.records) hits += d.exceeded_by(r.minority(), p.set_size);
    return static_cast<double>(hits) / static_cast<double>(p.rows());
}

inline double standard_ambiguity(const ConflictProfile& p) { return ambiguity(p, 0.0); }

struct AmbiguityCurve {
    std::vector<double> deltas;
    std::vector<double> values;
};

/// 0, 0.025, ..., 0.5.
inline std::vector<double> default_delta_grid() {
    std::vector<double> d;
    for (int k = 0; k <= 20; ++k) d.push_back(k / 40.0);
    return d;
}

inline AmbiguityCurve ambiguity_curve(const ConflictProfile& p, std::vector<double> deltas) {
    std::sort(deltas.begin(), deltas.end());
    AmbiguityCurve c;
    for (double d : deltas) {
        c.deltas.push_back(d);
        c.values.push_back(ambiguity(p, d));
    }
    return c;
}

/// Mean absolute difference of per-row conflict ratios.
inline double distance(const ConflictProfile& a, const ConflictProfile& b) {
    if (a.dataset_fingerprint != b.dataset_fingerprint || a.rows() != b.rows())
        throw data_error("profiles were computed on different datasets");
    if (a.rows() == 0) throw data_error("distance between empty profiles");
    double total = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) total += std::abs(a.conflict(i) - b.conflict(i));
    return total / static_cast<double>(a.rows());
}

/// Expected distance between two independent Uniform[0, 0.5] conflict ratios.
inline constexpr double kUniformDistanceBaseline = 1.0 / 6.0;

inline void write_profile_csv(const ConflictProfile& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw runtime_error("cannot write '" + path + "'");
    out << "row_id,n0,n1,conflict\n";
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const auto& r = p.records[i];
        out << r.row_id << ',';
        if (p.counts_applicable)
            out << r.n0 << ',' << r.n1;
        else
            out << "NA,NA";
        out << ',' << csv::format_double(p.conflict(i)) << '\n';
    }
}

inline void write_curve_csv(const AmbiguityCurve& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw runtime_error("cannot write '" + path + "'");
    out << "delta,ambiguity\n";
    for (std::size_t i = 0; i < c.deltas.size(); ++i)
        out << csv::format_double(c.deltas[i]) << ',' << csv::format_double(c.values[i]) << '\n';
}

}  // namespace mpaudit
