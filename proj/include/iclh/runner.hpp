#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "iclh/config.hpp"
#include "iclh/model_client.hpp"
#include "iclh/records.hpp"
#include "iclh/tasks.hpp"

namespace iclh::runner {

struct SimulationResult {
    int simulation = 0;
    bool complete = true; // false when the backend failed after retries
    std::string failure;
    std::vector<records::TrialRecord> records;
    std::vector<nlohmann::json> prior_samples;
    std::vector<records::Transcript> transcripts;
};

struct RunResult {
    long completed = 0;
    long incomplete = 0;
    long skipped = 0; // already present on resume
    long invalid_trials = 0;
};

// Agent labels used in the record log.
inline constexpr const char* kSubjectAgent = "subject";
inline constexpr const char* kBlrDefaultAgent = "blr_default";
inline constexpr const char* kBlrOracleAgent = "blr_oracle";
inline constexpr const char* kGreedyAgent = "greedy";
inline constexpr const char* kUcbAgent = "ucb";
inline constexpr const char* kRandomForestAgent = "random_forest";

class Runner {
  public:
    explicit Runner(config::RunConfig cfg);

    // Full run with persistence under cfg.output_dir; resumes a partial run.
    // max_new_simulations bounds how many missing simulations this
    // invocation executes (used to exercise resume).
    RunResult run(std::optional<int> max_new_simulations = std::nullopt);

    // One simulation, no persistence.
    SimulationResult run_simulation(int sim) const;

    std::uint64_t simulation_seed(int sim) const;
    const std::vector<tasks::Dataset>& datasets() const { return datasets_; }
    const config::RunConfig& config() const { return cfg_; }

  private:
    config::RunConfig cfg_;
    std::vector<tasks::Dataset> datasets_;

    std::unique_ptr<model_client::ModelClient> make_client(int sim) const;
    SimulationResult simulate_function(int sim) const;
    SimulationResult simulate_bandit(int sim) const;
    SimulationResult simulate_regression(int sim) const;
};

// Loads and prepares every *.csv in the directory; files that fail the
// eligibility rules are skipped.
std::vector<tasks::Dataset> load_prepared_datasets(const std::string& dir);

} // namespace iclh::runner
