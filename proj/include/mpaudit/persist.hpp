#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpaudit/core/error.hpp"
#include "mpaudit/data/ingest.hpp"
#include "mpaudit/rashomon.hpp"
#include "mpaudit/tree/decision_tree.hpp"

namespace mpaudit {

/// What a later `score` needs to read new rows the way training rows were read.
struct SetContext {
    Schema schema;
    std::vector<Transform> transforms;
    char delimiter = ',';
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "nan", "?"};
    std::string config_fingerprint;
};

inline nlohmann::json transforms_to_json(const std::vector<Transform>& ts) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : ts) {
        if (t.op == Transform::Op::drop)
            out.push_back({{"drop", t.columns}});
        else
            out.push_back({{"binarize", t.columns}, {"positive", t.positive}});
    }
    return out;
}

inline std::vector<Transform> transforms_from_json(const nlohmann::json& j) {
    std::vector<Transform> out;
    for (const auto& jt : j) {
        Transform t;
        auto names = [](const nlohmann::json& v) {
            return v.is_array() ? v.get<std::vector<std::string>>()
                                : std::vector<std::string>{v.get<std::string>()};
        };
        if (jt.contains("drop")) {
            t.op = Transform::Op::drop;
            t.columns = names(jt.at("drop"));
        } else if (jt.contains("binarize")) {
            t.op = Transform::Op::binarize;
            t.columns = names(jt.at("binarize"));
            t.positive = names(jt.at("positive"));
        } else {
            throw config_error("transform must be 'drop' or 'binarize': " + jt.dump());
        }
        out.push_back(std::move(t));
    }
    return out;
}

inline nlohmann::json score_to_json(const ScoreSpec& s) {
    if (s.kind == ScoreSpec::Kind::accuracy) return {{"type", "accuracy"}};
    return {{"type", "penalized"}, {"lambda", s.lambda}};
}

inline ScoreSpec score_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "accuracy") return ScoreSpec::accuracy();
    if (type == "penalized") return ScoreSpec::penalized(j.at("lambda").get<double>());
    throw config_error("unknown score type '" + type + "'");
}

namespace detail {

inline nlohmann::json provenance_to_json(const ScoredModel& m) {
    nlohmann::json j{{"origin", m.provenance.origin},
                     {"score", m.score},
                     {"correct", m.correct},
                     {"leaf_count", m.tree.leaf_count()},
                     {"params", params_to_json(m.provenance.params)}};
    j["candidate_index"] = m.provenance.candidate_index ? nlohmann::json(*m.provenance.candidate_index)
                                                        : nlohmann::json(nullptr);
    j["data_seed"] =
        m.provenance.data_seed ? nlohmann::json(*m.provenance.data_seed) : nlohmann::json(nullptr);
    return j;
}

inline void provenance_from_json(const nlohmann::json& j, ScoredModel& m) {
    m.provenance.origin = j.at("origin").get<std::string>();
    m.score = j.at("score").get<double>();
    m.correct = j.at("correct").get<std::size_t>();
    m.provenance.params = params_from_json(j.at("params"));
    if (!j.at("candidate_index").is_null()) m.provenance.candidate_index = j.at("candidate_index").get<std::size_t>();
    if (!j.at("data_seed").is_null()) m.provenance.data_seed = j.at("data_seed").get<std::uint64_t>();
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw runtime_error("cannot write '" + p.string() + "'");
    out << j.dump(1) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw data_error("cannot open '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed JSON in '" + p.string() + "': " + e.what());
    }
}

inline std::string member_file(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%05zu.json", i);
    return buf;
}

}  // namespace detail

/// Directory layout: manifest.json, baseline.json, members/member_NNNNN.json.
inline void save_rashomon(const RashomonSet& rs, const SetContext& ctx, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "members");
    for (const auto& e : fs::directory_iterator(dir / "members")) fs::remove(e.path());
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < rs.members.size(); ++i) {
        const auto file = detail::member_file(i);
        detail::write_json(dir / "members" / file, tree_to_json(rs.members[i].tree));
        auto jm = detail::provenance_to_json(rs.members[i]);
        jm["file"] = "members/" + file;
        members.push_back(std::move(jm));
    }
    detail::write_json(dir / "baseline.json", tree_to_json(rs.baseline.tree));
    auto baseline = detail::provenance_to_json(rs.baseline);
    baseline["file"] = "baseline.json";
    baseline["source"] = rs.baseline_source;

    nlohmann::json manifest{{"format", "mpaudit-rashomon-set"},
                            {"version", 1},
                            {"kind", rs.exhaustive ? "exhaustive" : "ad_hoc"},
                            {"epsilon", rs.epsilon},
                            {"score", score_to_json(rs.score)},
                            {"threshold", rs.threshold},
                            {"strategy", rs.strategy},
                            {"scored_on", rs.scored_on},
                            {"candidates_considered", rs.candidates_considered},
                            {"all_candidates_rejected", rs.all_candidates_rejected},
                            {"config_fingerprint", ctx.config_fingerprint},
                            {"baseline", baseline},
                            {"members", members},
                            {"data",
                             {{"schema", schema_to_json(ctx.schema)},
                              {"transforms", transforms_to_json(ctx.transforms)},
                              {"delimiter", std::string(1, ctx.delimiter)},
                              {"missing_tokens", ctx.missing_tokens}}}};
    detail::write_json(dir / "manifest.json", manifest);
}

struct LoadedSet {
    RashomonSet set;
    SetContext context;
};

inline LoadedSet load_rashomon(const std::filesystem::path& dir) {
    const auto m = detail::read_json(dir / "manifest.json");
    if (m.value("format", std::string{}) != "mpaudit-rashomon-set")
        throw data_error("'" + dir.string() + "' is not a persisted Rashomon set");
    LoadedSet out;
    try {
        auto& rs = out.set;
        rs.exhaustive = m.at("kind").get<std::string>() == "exhaustive";
        rs.epsilon = m.at("epsilon").get<double>();
        rs.score = score_from_json(m.at("score"));
        rs.threshold = m.at("threshold").get<double>();
        rs.strategy = m.at("strategy").get<std::string>();
        rs.scored_on = m.value("scored_on", std::string("test"));
        rs.candidates_considered = m.at("candidates_considered").get<std::size_t>();
        rs.all_candidates_rejected = m.value("all_candidates_rejected", false);
        const auto& jb = m.at("baseline");
        rs.baseline.tree = tree_from_json(detail::read_json(dir / jb.at("file").get<std::string>()));
        detail::provenance_from_json(jb, rs.baseline);
        rs.baseline_source = jb.at("source").get<std::string>();
        for (const auto& jm : m.at("members")) {
            ScoredModel sm;
            sm.tree = tree_from_json(detail::read_json(dir / jm.at("file").get<std::string>()));
            detail::provenance_from_json(jm, sm);
            rs.members.push_back(std::move(sm));
        }
        const auto& jd = m.at("data");
        out.context.schema = schema_from_json(jd.at("schema"));
        out.context.transforms = transforms_from_json(jd.at("transforms"));
        out.context.delimiter = jd.at("delimiter").get<std::string>().at(0);
        out.context.missing_tokens = jd.at("missing_tokens").get<std::vector<std::string>>();
        out.context.config_fingerprint = m.at("config_fingerprint").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed manifest in '" + dir.string() + "': " + e.what());
    }
    if (out.set.members.empty()) throw data_error("persisted Rashomon set has no members");
    return out;
}

}  // namespace mpaudit
