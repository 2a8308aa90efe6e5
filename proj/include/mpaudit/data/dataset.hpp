#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpaudit/core/error.hpp"
#include "mpaudit/core/hash.hpp"

namespace mpaudit {

enum class ColumnKind { numeric, binary, ordinal, categorical };

inline std::string_view to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::binary: return "binary";
        case ColumnKind::ordinal: return "ordinal";
        case ColumnKind::categorical: return "categorical";
    }
    return "numeric";
}

inline ColumnKind parse_column_kind(std::string_view s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "binary") return ColumnKind::binary;
    if (s == "ordinal") return ColumnKind::ordinal;
    if (s == "categorical") return ColumnKind::categorical;
    throw config_error("unknown column kind '" + std::string(s) + "'");
}

/// Numeric and ordinal columns split on thresholds; binary and categorical
/// columns are compared by category code.
inline bool is_threshold_kind(ColumnKind k) {
    return k == ColumnKind::numeric || k == ColumnKind::ordinal;
}

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    /// Category names indexed by code; only used for categorical columns.
    std::vector<std::string> categories;

    friend bool operator==(const Column&, const Column&) = default;
};

struct Schema {
    std::vector<Column> columns;
    std::string label = "label";

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }
    std::size_t index_of(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw data_error("unknown column '" + std::string(name) + "'");
    }

    friend bool operator==(const Schema&, const Schema&) = default;
};

/// Per-row generating component for synthetic data, plus the conflict ratio
/// that component implies.
struct SyntheticTags {
    std::vector<int> component;
    std::vector<double> ground_truth;

    friend bool operator==(const SyntheticTags&, const SyntheticTags&) = default;
};

/// Immutable n x d feature matrix (row-major) with binary labels.
class Dataset {
public:
    Dataset() = default;

    Dataset(Schema schema, std::vector<double> values, std::vector<std::uint8_t> labels,
            std::vector<std::uint64_t> row_ids = {}, std::optional<SyntheticTags> tags = {})
        : schema_(std::move(schema)),
          values_(std::move(values)),
          labels_(std::move(labels)),
          row_ids_(std::move(row_ids)),
          tags_(std::move(tags)) {
        if (row_ids_.empty()) {
            row_ids_.resize(labels_.size());
            for (std::size_t i = 0; i < row_ids_.size(); ++i) row_ids_[i] = i;
        }
        validate();
    }

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t cols() const noexcept { return schema_.columns.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    const Schema& schema() const noexcept { return schema_; }
    const Column& column(std::size_t j) const { return schema_.columns[j]; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * cols(), cols()};
    }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
    std::uint8_t label(std::size_t i) const { return labels_[i]; }
    std::uint64_t row_id(std::size_t i) const { return row_ids_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::span<const std::uint64_t> row_ids() const noexcept { return row_ids_; }
    const std::optional<SyntheticTags>& tags() const noexcept { return tags_; }

    /// Rows in the given order; duplicates allowed (bootstrap).
    Dataset subset(std::span<const std::size_t> idx) const {
        const std::size_t d = cols();
        std::vector<double> v;
        v.reserve(idx.size() * d);
        std::vector<std::uint8_t> y;
        std::vector<std::uint64_t> ids;
        y.reserve(idx.size());
        ids.reserve(idx.size());
        std::optional<SyntheticTags> t;
        if (tags_) t.emplace();
        for (std::size_t i : idx) {
            if (i >= rows()) throw data_error("row index out of range");
            auto r = row(i);
            v.insert(v.end(), r.begin(), r.end());
            y.push_back(labels_[i]);
            ids.push_back(row_ids_[i]);
            if (t) {
                t->component.push_back(tags_->component[i]);
                t->ground_truth.push_back(tags_->ground_truth[i]);
            }
        }
        return Dataset(schema_, std::move(v), std::move(y), std::move(ids), std::move(t));
    }

    /// Keeps the listed columns, in the listed order.
    Dataset select_columns(std::span<const std::size_t> keep) const {
        Schema s;
        s.label = schema_.label;
        for (std::size_t j : keep) {
            if (j >= cols()) throw data_error("column index out of range");
            s.columns.push_back(schema_.columns[j]);
        }
        std::vector<double> v;
        v.reserve(rows() * keep.size());
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j : keep) v.push_back(at(i, j));
        return Dataset(std::move(s), std::move(v), labels_, row_ids_, tags_);
    }

    /// Same rows and labels with a replaced value matrix.
    Dataset with_values(std::vector<double> values) const {
        return Dataset(schema_, std::move(values), labels_, row_ids_, tags_);
    }

    /// Content hash over schema, values, labels and row order.
    std::string fingerprint() const {
        Fnv1a h;
        h.str(schema_.label);
        for (const auto& c : schema_.columns) {
            h.str(c.name).str(to_string(c.kind));
            for (const auto& cat : c.categories) h.str(cat);
        }
        h.u64(rows());
        for (double x : values_) h.f64(x);
        h.bytes(labels_.data(), labels_.size());
        for (auto id : row_ids_) h.u64(id);
        return h.hex();
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    void validate() const {
        const std::size_t d = cols();
        if (values_.size() != labels_.size() * d)
            throw data_error("value matrix does not match rows x columns");
        if (row_ids_.size() != labels_.size()) throw data_error("row id count mismatch");
        for (auto y : labels_)
            if (y > 1) throw data_error("label column non-binary");
        if (tags_ && (tags_->component.size() != rows() || tags_->ground_truth.size() != rows()))
            throw data_error("synthetic tags do not match row count");
        for (std::size_t j = 0; j < d; ++j) {
            const auto& c = schema_.columns[j];
            if (c.kind == ColumnKind::categorical && c.categories.empty())
                throw data_error("categorical column '" + c.name + "' has no categories");
        }
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double x = values_[i * d + j];
                const auto& c = schema_.columns[j];
                if (std::isnan(x)) throw data_error("missing value in column '" + c.name + "'");
                if (c.kind == ColumnKind::binary && x != 0.0 && x != 1.0)
                    throw data_error("binary column '" + c.name + "' holds a value outside {0,1}");
                if (c.kind == ColumnKind::categorical &&
                    (x < 0 || x != std::floor(x) || x >= static_cast<double>(c.categories.size())))
                    throw data_error("categorical column '" + c.name + "' holds an invalid code");
            }
        }
    }

    Schema schema_;
    std::vector<double> values_;
    std::vector<std::uint8_t> labels_;
    std::vector<std::uint64_t> row_ids_;
    std::optional<SyntheticTags> tags_;
};

}  // namespace mpaudit
