// mpaudit: predictive-multiplicity audits from the command line.
//
//   mpaudit audit   --config PATH [--out DIR] [--seed N]
//   mpaudit score   --set DIR --data PATH [--delta D] [--out FILE]
//   mpaudit compare --sets DIR DIR... --data PATH [--out DIR]
//   mpaudit probe   --config PATH --sizes N,... [--repeats R] [--out FILE] [--seed N]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mpaudit/audit/commands.hpp"
#include "mpaudit/core/error.hpp"
#include "mpaudit/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mpaudit;

int run_audit(const std::string& config, const std::optional<std::string>& out, std::optional<std::uint64_t> seed) {
    const auto cfg = audit::load_config(config, seed);
    const auto res = audit::cmd_audit(cfg, out ? std::optional<fs::path>(*out) : std::nullopt);
    const auto& r = res.report;
    std::cout << "members " << r.members << ", standard ambiguity " << csv::format_double(r.standard_ambiguity)
              << ", flagged " << r.flagged.size() << " rows; wrote " << res.output_dir.string() << '\n';
    return 0;
}

int run_score(const std::string& set, const std::string& data, double delta, const std::string& out) {
    const auto res = audit::cmd_score(set, data, delta, out);
    std::cout << res.profile.rows() << " rows scored, " << res.flagged << " flagged; wrote " << out << '\n';
    return 0;
}

int run_compare(const std::vector<std::string>& sets, const std::string& data, const std::string& out) {
    std::vector<fs::path> dirs(sets.begin(), sets.end());
    const auto res = audit::cmd_compare(dirs, data, out);
    for (std::size_t a = 0; a < res.labels.size(); ++a) {
        for (std::size_t b = 0; b < res.labels.size(); ++b)
            std::cout << (b ? "\t" : "") << csv::format_double(res.distances[a][b]);
        std::cout << '\n';
    }
    std::cout << "wrote " << out << '\n';
    return 0;
}

int run_probe(const std::string& config, const std::vector<std::size_t>& sizes, std::size_t repeats,
              const std::optional<std::string>& out, std::optional<std::uint64_t> seed) {
    const auto cfg = audit::load_config(config, seed);
    const auto rows = audit::cmd_sample_size_probe(cfg, sizes, repeats,
                                                   out ? std::optional<fs::path>(*out) : std::nullopt);
    std::cout << "size,best_cv_accuracy\n";
    for (const auto& r : rows) std::cout << r.size << ',' << csv::format_double(r.best_cv_accuracy) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive multiplicity audits over Rashomon sets of decision trees"};
    app.set_version_flag("--version", std::string(mpaudit::kToolkitVersion));
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string config, set_dir, data, out_file = "scores.csv", compare_out = "compare_out";
    std::optional<std::string> out_dir, probe_out;
    double delta = 0.3;
    std::vector<std::string> sets;
    std::vector<std::size_t> sizes;
    std::size_t repeats = 3;

    auto* audit = app.add_subcommand("audit", "Build a Rashomon set and write an audit report");
    audit->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    audit->add_option("--out", out_dir, "Output directory (overrides the config)");
    audit->add_option("--seed", seed, "Override rashomon.master_seed");

    auto* score = app.add_subcommand("score", "Conflict ratios of new rows under a persisted set");
    score->add_option("--set", set_dir, "Persisted Rashomon set directory")->required();
    score->add_option("--data", data, "Rows to score (CSV)")->required()->check(CLI::ExistingFile);
    score->add_option("--delta", delta, "Flag rows whose conflict exceeds this")->capture_default_str()->check(CLI::Range(0.0, 0.5));
    score->add_option("--out", out_file, "Output CSV")->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Pairwise conflict-ratio distances between sets");
    compare->add_option("--sets", sets, "Persisted Rashomon set directories")->required()->expected(2, -1);
    compare->add_option("--data", data, "Shared rows (CSV)")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", compare_out, "Output directory")->capture_default_str();

    auto* probe = app.add_subcommand("probe", "Best cross-validated accuracy per training size");
    probe->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    probe->add_option("--sizes", sizes, "Training sizes")->required()->delimiter(',');
    probe->add_option("--repeats", repeats, "Draws averaged per size")->capture_default_str();
    probe->add_option("--out", probe_out, "Output CSV");
    probe->add_option("--seed", seed, "Override rashomon.master_seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        if (*audit) return run_audit(config, out_dir, seed);
        if (*score) return run_score(set_dir, data, delta, out_file);
        if (*compare) return run_compare(sets, data, compare_out);
        if (*probe) return run_probe(config, sizes, repeats, probe_out, seed);
    } catch (const Error& e) {
        std::cerr << "mpaudit: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "mpaudit: " << e.what() << '\n';
        return exit_code(ErrorKind::runtime);
    }
    return 0;
}
