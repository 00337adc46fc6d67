#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace iclh::report {

struct AnalysisSummary {
    std::string experiment;
    long n_records = 0;
    long n_invalid = 0;
    std::vector<std::filesystem::path> written;
};

// Reads a finished run directory and writes derived tables under
// <out_dir>: curves.csv, effects.csv, strategy.csv (bandit),
// extremes.csv (regression) and priors.csv (when probes were recorded).
AnalysisSummary analyze_run(const std::filesystem::path& run_dir,
                            const std::filesystem::path& out_dir);

struct ReportSummary {
    std::vector<std::filesystem::path> figures;
    std::vector<std::string> notices; // skipped panels and why
};

// Renders deterministic SVG figures for a run: learning curves, per-task
// means, effect sizes, the strategy decomposition (bandit) and elicited
// priors (when probes were recorded).
ReportSummary render_report(const std::filesystem::path& run_dir,
                            const std::filesystem::path& out_dir);

} // namespace iclh::report
