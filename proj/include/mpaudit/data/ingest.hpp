#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpaudit/data/csv.hpp"
#include "mpaudit/data/dataset.hpp"

namespace mpaudit {

/// A declarative preprocessing step applied to the raw text table.
struct Transform {
    enum class Op { drop, binarize };
    Op op = Op::drop;
    std::vector<std::string> columns;
    /// binarize: values mapped to 1; everything else (non-missing) maps to 0.
    std::vector<std::string> positive;

    friend bool operator==(const Transform&, const Transform&) = default;
};

struct IngestOptions {
    char delimiter = ',';
    std::string label;
    std::map<std::string, ColumnKind> kinds;
    std::vector<Transform> transforms;
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "nan", "?"};
    /// Column holding stable row ids; consumed, not a feature.
    std::optional<std::string> id_column;
    /// When set, feature columns and category dictionaries are taken from this
    /// schema instead of being inferred (used to score new data against a
    /// persisted model set).
    std::optional<Schema> fixed_schema;
    /// When false and the label column is absent, rows are read unlabelled.
    bool label_required = true;
};

struct IngestResult {
    Dataset dataset;
    std::size_t rows_read = 0;
    std::size_t rows_removed = 0;
    bool labelled = true;

    std::string report() const {
        return std::to_string(rows_removed) + (rows_removed == 1 ? " row" : " rows") +
               " removed (missing values), " + std::to_string(dataset.rows()) + " kept";
    }
};

namespace detail {

inline std::size_t header_index(const csv::Table& t, const std::string& name,
                                const char* context) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end())
        throw data_error(std::string("unknown column '") + name + "' in " + context);
    return static_cast<std::size_t>(it - t.header.begin());
}

inline void apply_transforms(csv::Table& t, const std::vector<Transform>& transforms,
                             const std::set<std::string>& missing) {
    for (const auto& tr : transforms) {
        if (tr.op == Transform::Op::drop) {
            std::vector<std::size_t> drop;
            for (const auto& c : tr.columns) drop.push_back(header_index(t, c, "drop transform"));
            std::sort(drop.rbegin(), drop.rend());
            for (std::size_t j : drop) {
                t.header.erase(t.header.begin() + static_cast<std::ptrdiff_t>(j));
                for (auto& r : t.rows) r.erase(r.begin() + static_cast<std::ptrdiff_t>(j));
            }
        } else {
            for (const auto& c : tr.columns) {
                const std::size_t j = header_index(t, c, "binarize transform");
                for (auto& r : t.rows) {
                    if (missing.count(r[j])) continue;
                    const bool pos =
                        std::find(tr.positive.begin(), tr.positive.end(), r[j]) != tr.positive.end();
                    r[j] = pos ? "1" : "0";
                }
            }
        }
    }
}

inline bool is_missing_cell(const std::string& s, const std::set<std::string>& missing) {
    return missing.count(s) > 0;
}

}  // namespace detail

/// Kinds produced by binarize transforms, so callers need not redeclare them.
inline std::set<std::string> binarized_columns(const std::vector<Transform>& transforms) {
    std::set<std::string> out;
    for (const auto& t : transforms)
        if (t.op == Transform::Op::binarize) out.insert(t.columns.begin(), t.columns.end());
    return out;
}

/// Parses delimited text into a Dataset: drops, binarizations, then deletion
/// of every row with a missing value in a remaining column.
inline IngestResult ingest_table(csv::Table table, const IngestOptions& opt) {
    const std::set<std::string> missing(opt.missing_tokens.begin(), opt.missing_tokens.end());
    if (opt.label.empty()) throw config_error("schema does not name a label column");
    for (const auto& [name, kind] : opt.kinds) {
        (void)kind;
        detail::header_index(table, name, "schema");
    }
    detail::apply_transforms(table, opt.transforms, missing);
    const auto binarized = binarized_columns(opt.transforms);

    IngestResult result;
    result.rows_read = table.rows.size();

    const auto label_it = std::find(table.header.begin(), table.header.end(), opt.label);
    const bool has_label = label_it != table.header.end();
    if (!has_label && opt.label_required)
        throw data_error("unknown column '" + opt.label + "' (label)");
    result.labelled = has_label;
    const std::size_t label_col = has_label ? static_cast<std::size_t>(label_it - table.header.begin())
                                            : std::numeric_limits<std::size_t>::max();
    std::optional<std::size_t> id_col;
    if (opt.id_column) id_col = detail::header_index(table, *opt.id_column, "id column");

    // Feature columns and the raw-table column each one reads.
    Schema schema;
    schema.label = opt.label;
    std::vector<std::size_t> source;
    if (opt.fixed_schema) {
        schema.columns = opt.fixed_schema->columns;
        for (const auto& c : schema.columns) {
            auto it = std::find(table.header.begin(), table.header.end(), c.name);
            if (it == table.header.end())
                throw data_error("feature mismatch: column '" + c.name + "' not present");
            source.push_back(static_cast<std::size_t>(it - table.header.begin()));
        }
    } else {
        for (std::size_t j = 0; j < table.header.size(); ++j) {
            if (j == label_col || (id_col && j == *id_col)) continue;
            Column c;
            c.name = table.header[j];
            schema.columns.push_back(c);
            source.push_back(j);
        }
    }

    // Row deletion happens before kind inference so that categories are
    // collected only from surviving rows.
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        bool complete = !has_label || !detail::is_missing_cell(row[label_col], missing);
        for (std::size_t k = 0; complete && k < source.size(); ++k)
            if (detail::is_missing_cell(row[source[k]], missing)) complete = false;
        if (complete) keep.push_back(r);
    }
    result.rows_removed = table.rows.size() - keep.size();
    if (keep.empty()) throw data_error("empty dataset after row deletion");

    if (!opt.fixed_schema) {
        for (std::size_t k = 0; k < schema.columns.size(); ++k) {
            auto& c = schema.columns[k];
            const std::size_t j = source[k];
            bool all_numeric = true, all_binary = true;
            std::set<std::string> distinct;
            for (std::size_t r : keep) {
                const auto& s = table.rows[r][j];
                distinct.insert(s);
                auto v = csv::parse_double(s);
                if (!v || std::isnan(*v)) {
                    all_numeric = all_binary = false;
                } else if (*v != 0.0 && *v != 1.0) {
                    all_binary = false;
                }
            }
            if (auto it = opt.kinds.find(c.name); it != opt.kinds.end()) {
                c.kind = it->second;
            } else if (binarized.count(c.name)) {
                c.kind = ColumnKind::binary;
            } else {
                c.kind = all_binary ? ColumnKind::binary
                                    : (all_numeric ? ColumnKind::numeric : ColumnKind::categorical);
            }
            if (c.kind == ColumnKind::categorical) c.categories.assign(distinct.begin(), distinct.end());
        }
    }

    std::vector<double> values;
    values.reserve(keep.size() * schema.columns.size());
    std::vector<std::uint8_t> labels;
    std::vector<std::uint64_t> ids;
    for (std::size_t r : keep) {
        const auto& row = table.rows[r];
        for (std::size_t k = 0; k < schema.columns.size(); ++k) {
            const auto& c = schema.columns[k];
            const auto& s = row[source[k]];
            if (c.kind == ColumnKind::categorical) {
                auto it = std::find(c.categories.begin(), c.categories.end(), s);
                if (it == c.categories.end())
                    throw data_error("unknown category '" + s + "' in column '" + c.name + "'");
                values.push_back(static_cast<double>(it - c.categories.begin()));
            } else {
                auto v = csv::parse_double(s);
                if (!v || std::isnan(*v))
                    throw data_error("non-numeric value '" + s + "' in column '" + c.name + "'");
                if (c.kind == ColumnKind::binary && *v != 0.0 && *v != 1.0)
                    throw data_error("binary column '" + c.name + "' holds value '" + s + "'");
                values.push_back(*v);
            }
        }
        if (has_label) {
            auto v = csv::parse_double(row[label_col]);
            if (!v || (*v != 0.0 && *v != 1.0)) throw data_error("label column non-binary");
            labels.push_back(static_cast<std::uint8_t>(*v));
        } else {
            labels.push_back(0);
        }
        if (id_col) {
            auto v = csv::parse_double(row[*id_col]);
            if (!v || *v < 0 || *v != std::floor(*v))
                throw data_error("invalid row id '" + row[*id_col] + "'");
            ids.push_back(static_cast<std::uint64_t>(*v));
        } else {
            ids.push_back(r);
        }
    }
    result.dataset = Dataset(std::move(schema), std::move(values), std::move(labels), std::move(ids));
    return result;
}

inline IngestResult ingest_csv(const std::string& path, const IngestOptions& opt) {
    return ingest_table(csv::read(path, opt.delimiter), opt);
}

// ---------------------------------------------------------------------------
// Canonical export: delimited text plus a "<file>.schema.json" sidecar.

inline nlohmann::json schema_to_json(const Schema& s) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : s.columns) {
        nlohmann::json jc{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
        if (c.kind == ColumnKind::categorical) jc["categories"] = c.categories;
        cols.push_back(std::move(jc));
    }
    return {{"label", s.label}, {"columns", cols}};
}

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    s.label = j.at("label").get<std::string>();
    for (const auto& jc : j.at("columns")) {
        Column c;
        c.name = jc.at("name").get<std::string>();
        c.kind = parse_column_kind(jc.at("kind").get<std::string>());
        if (jc.contains("categories")) c.categories = jc.at("categories").get<std::vector<std::string>>();
        s.columns.push_back(std::move(c));
    }
    return s;
}

inline constexpr const char* kRowIdColumn = "row_id";

inline void write_canonical(const Dataset& ds, const std::string& path, char delimiter = ',') {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw runtime_error("cannot write '" + path + "'");
    std::vector<std::string> header{kRowIdColumn};
    for (const auto& c : ds.schema().columns) header.push_back(c.name);
    header.push_back(ds.schema().label);
    csv::write_record(out, header, delimiter);
    std::vector<std::string> rec;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        rec.clear();
        rec.push_back(std::to_string(ds.row_id(i)));
        for (std::size_t j = 0; j < ds.cols(); ++j) {
            const auto& c = ds.column(j);
            const double x = ds.at(i, j);
            rec.push_back(c.kind == ColumnKind::categorical ? c.categories[static_cast<std::size_t>(x)]
                                                            : csv::format_double(x));
        }
        rec.push_back(std::to_string(ds.label(i)));
        csv::write_record(out, rec, delimiter);
    }
    auto sidecar = schema_to_json(ds.schema());
    sidecar["delimiter"] = std::string(1, delimiter);
    sidecar["id_column"] = kRowIdColumn;
    std::ofstream side(path + ".schema.json");
    side << sidecar.dump(2) << '\n';
}

inline Dataset read_canonical(const std::string& path) {
    std::ifstream side(path + ".schema.json");
    if (!side) throw data_error("missing schema sidecar for '" + path + "'");
    const auto j = nlohmann::json::parse(side);
    IngestOptions opt;
    opt.fixed_schema = schema_from_json(j);
    opt.label = opt.fixed_schema->label;
    opt.delimiter = j.value("delimiter", std::string(",")).at(0);
    opt.id_column = j.value("id_column", std::string(kRowIdColumn));
    opt.missing_tokens = {""};
    return ingest_csv(path, opt).dataset;
}

}  // namespace mpaudit
