#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iclh/config.hpp"
#include "iclh/errors.hpp"
#include "iclh/report.hpp"
#include "iclh/runner.hpp"

namespace {

int do_run(const std::string& config_path, const std::vector<std::string>& overrides,
           std::optional<int> max_new, bool force_probes) {
    auto cfg = iclh::config::load_config(config_path, overrides);
    if (force_probes) cfg.prior_probes = true;
    iclh::runner::Runner runner(std::move(cfg));
    auto result = runner.run(max_new);
    std::cout << "completed=" << result.completed << " skipped=" << result.skipped
              << " incomplete=" << result.incomplete
              << " invalid_trials=" << result.invalid_trials << "\n";
    return result.incomplete > 0 ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"in-context learning experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string run_dir;
    std::string out_dir;
    int max_new = -1;

    auto add_config_opts = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("-s,--set", overrides, "override, dotted key=value");
    };

    auto* run_cmd = app.add_subcommand("run", "execute (or resume) a run");
    add_config_opts(run_cmd);
    run_cmd->add_option("--max-new", max_new, "cap on new simulations this invocation");

    auto* probe_cmd =
        app.add_subcommand("probe-priors", "execute a run with prior probes enabled");
    add_config_opts(probe_cmd);
    probe_cmd->add_option("--max-new", max_new, "cap on new simulations this invocation");

    auto* validate_cmd = app.add_subcommand("validate-config", "parse and validate a config");
    add_config_opts(validate_cmd);

    auto* analyze_cmd = app.add_subcommand("analyze", "derive tables from a finished run");
    analyze_cmd->add_option("run_dir,-r,--run", run_dir, "run directory")->required();
    analyze_cmd->add_option("-o,--out", out_dir, "output directory (default <run>/analysis)");

    auto* report_cmd = app.add_subcommand("report", "render figures from a finished run");
    report_cmd->add_option("run_dir,-r,--run", run_dir, "run directory")->required();
    report_cmd->add_option("-o,--out", out_dir, "output directory (default <run>/figures)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::optional<int> cap;
        if (max_new >= 0) cap = max_new;
        if (run_cmd->parsed()) return do_run(config_path, overrides, cap, false);
        if (probe_cmd->parsed()) return do_run(config_path, overrides, cap, true);
        if (validate_cmd->parsed()) {
            auto cfg = iclh::config::load_config(config_path, overrides);
            std::cout << "ok: " << iclh::config::to_string(cfg.experiment) << " run, "
                      << cfg.n_simulations << " simulations\n";
            return 0;
        }
        if (analyze_cmd->parsed()) {
            auto out = out_dir.empty() ? run_dir + "/analysis" : out_dir;
            auto summary = iclh::report::analyze_run(run_dir, out);
            std::cout << summary.experiment << ": " << summary.n_records << " records ("
                      << summary.n_invalid << " invalid)\n";
            for (const auto& p : summary.written) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }
        if (report_cmd->parsed()) {
            auto out = out_dir.empty() ? run_dir + "/figures" : out_dir;
            auto summary = iclh::report::render_report(run_dir, out);
            for (const auto& p : summary.figures) std::cout << "wrote " << p.string() << "\n";
            for (const auto& n : summary.notices) std::cout << "note: " << n << "\n";
            return 0;
        }
    } catch (const iclh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
