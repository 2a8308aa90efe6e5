#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpaudit/metrics.hpp"
#include "mpaudit/persist.hpp"
#include "mpaudit/rashomon.hpp"
#include "mpaudit/version.hpp"

namespace mpaudit::audit {

inline constexpr int kReportVersion = 1;

struct FlaggedRow {
    std::uint64_t row_id = 0;
    std::size_t n0 = 0, n1 = 0;
    double conflict = 0;
    /// One character per member, in member order: that member's prediction.
    std::string member_votes;
};

struct AuditReport {
    std::string config_fingerprint;
    std::string generated_at;

    std::string data_source;
    std::size_t rows_read = 0, rows_removed = 0, n_train = 0, n_test = 0;
    std::string test_fingerprint;

    std::string strategy;
    double epsilon = 0;
    ScoreSpec score;
    std::string baseline_source;
    double baseline_score = 0;
    double threshold = 0;
    std::size_t members = 0;
    std::size_t candidates_considered = 0;
    bool all_candidates_rejected = false;
    std::string scored_on;

    double flag_threshold = 0.3;
    double standard_ambiguity = 0;
    AmbiguityCurve curve;
    std::optional<double> ground_truth_distance;
    std::vector<FlaggedRow> flagged;
};

/// UTC, second resolution. The only nondeterministic field of a report.
inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Rows whose conflict exceeds delta_star, with per-member votes.
inline std::vector<FlaggedRow> flag_rows(const ConflictProfile& p, const PredictionMatrix& m,
                                         double delta_star) {
    const Delta d(delta_star);
    std::vector<FlaggedRow> out;
    for (std::size_t x = 0; x < p.rows(); ++x) {
        const auto& r = p.records[x];
        if (!d.exceeded_by(r.minority(), p.set_size)) continue;
        FlaggedRow f{r.row_id, r.n0, r.n1, p.conflict(x), {}};
        f.member_votes.reserve(m.models());
        for (std::size_t g = 0; g < m.models(); ++g) f.member_votes.push_back(m.at(g, x) ? '1' : '0');
        out.push_back(std::move(f));
    }
    return out;
}

inline nlohmann::ordered_json to_json(const AuditReport& r) {
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.curve.deltas.size(); ++i)
        curve.push_back({{"delta", r.curve.deltas[i]}, {"ambiguity", r.curve.values[i]}});
    nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
    for (const auto& f : r.flagged)
        flagged.push_back({{"row_id", f.row_id},
                           {"n0", f.n0},
                           {"n1", f.n1},
                           {"conflict", f.conflict},
                           {"member_votes", f.member_votes}});
    nlohmann::ordered_json score{{"type", r.score.kind == ScoreSpec::Kind::accuracy ? "accuracy" : "penalized"}};
    if (r.score.kind == ScoreSpec::Kind::penalized) score["lambda"] = r.score.lambda;

    nlohmann::ordered_json j;
    j["format"] = "mpaudit-audit-report";
    j["report_version"] = kReportVersion;
    j["toolkit_version"] = kToolkitVersion;
    j["config_fingerprint"] = r.config_fingerprint;
    j["generated_at"] = r.generated_at;
    j["data"] = {{"source", r.data_source},
                 {"rows_read", r.rows_read},
                 {"rows_removed", r.rows_removed},
                 {"n_train", r.n_train},
                 {"n_test", r.n_test},
                 {"test_fingerprint", r.test_fingerprint}};
    j["rashomon"] = {{"strategy", r.strategy},
                     {"epsilon", r.epsilon},
                     {"score", score},
                     {"baseline_source", r.baseline_source},
                     {"baseline_score", r.baseline_score},
                     {"threshold", r.threshold},
                     {"members", r.members},
                     {"candidates_considered", r.candidates_considered},
                     {"all_candidates_rejected", r.all_candidates_rejected},
                     {"scored_on", r.scored_on}};
    j["metrics"] = {{"flag_threshold", r.flag_threshold},
                    {"standard_ambiguity", r.standard_ambiguity},
                    {"flagged_count", r.flagged.size()},
                    {"ambiguity_curve", curve}};
    j["metrics"]["ground_truth_distance"] =
        r.ground_truth_distance ? nlohmann::ordered_json(*r.ground_truth_distance) : nlohmann::ordered_json(nullptr);
    j["flagged"] = flagged;
    return j;
}

/// Human-readable block rendered from the JSON form, so each number is
/// printed from the very value the JSON report carries.
inline std::string render_summary(const nlohmann::ordered_json& j) {
    auto v = [](const nlohmann::ordered_json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    const auto& d = j.at("data");
    const auto& rs = j.at("rashomon");
    const auto& m = j.at("metrics");
    std::ostringstream o;
    o << "Predictive multiplicity audit\n";
    o << "generated_at: " << v(j.at("generated_at")) << '\n';
    o << "config fingerprint: " << v(j.at("config_fingerprint")) << "  toolkit " << v(j.at("toolkit_version"))
      << '\n';
    o << "flag threshold (delta*): " << v(m.at("flag_threshold")) << "\n\n";

    o << "Data: " << v(d.at("source")) << ", " << v(d.at("rows_read")) << " rows read, "
      << v(d.at("rows_removed")) << " removed; train " << v(d.at("n_train")) << ", test " << v(d.at("n_test"))
      << '\n';
    o << "Rashomon set: strategy " << v(rs.at("strategy")) << ", epsilon " << v(rs.at("epsilon")) << ", score "
      << v(rs.at("score").at("type"));
    if (rs.at("score").contains("lambda")) o << " (lambda " << v(rs.at("score").at("lambda")) << ")";
    o << '\n';
    o << "  baseline (" << v(rs.at("baseline_source")) << ") score " << v(rs.at("baseline_score"))
      << ", threshold " << v(rs.at("threshold")) << ", scored on " << v(rs.at("scored_on")) << '\n';
    o << "  members " << v(rs.at("members")) << " of " << v(rs.at("candidates_considered")) << " candidates";
    if (rs.at("all_candidates_rejected").get<bool>()) o << " (every candidate was rejected; baseline only)";
    o << "\n\n";

    o << "Standard ambiguity: " << v(m.at("standard_ambiguity")) << '\n';
    if (!m.at("ground_truth_distance").is_null())
        o << "Distance to ground-truth conflicts: " << v(m.at("ground_truth_distance")) << '\n';
    o << "Ambiguity curve (delta: ambiguity)\n";
    for (const auto& p : m.at("ambiguity_curve")) o << "  " << v(p.at("delta")) << ": " << v(p.at("ambiguity")) << '\n';
    o << "\nFlagged rows (conflict > " << v(m.at("flag_threshold")) << "): " << v(m.at("flagged_count")) << '\n';
    for (const auto& f : j.at("flagged"))
        o << "  row " << v(f.at("row_id")) << ": n0 " << v(f.at("n0")) << ", n1 " << v(f.at("n1")) << ", conflict "
          << v(f.at("conflict")) << '\n';
    if (!j.at("flagged").empty())
        o << "Flagged decisions are contested by comparably accurate models and warrant human review.\n";
    return o.str();
}

}  // namespace mpaudit::audit
