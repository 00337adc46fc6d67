#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iclh/model_client.hpp"
#include "iclh/random_forest.hpp"
#include "iclh/scripted_agents.hpp"
#include "iclh/tasks.hpp"

namespace iclh::config {

enum class Experiment { function, bandit, regression };

Experiment experiment_from_string(const std::string& name);
std::string to_string(Experiment e);

struct RunConfig {
    Experiment experiment = Experiment::function;
    int n_simulations = 100;
    int n_tasks = 5;
    int trials_per_task = 5; // bandit default 10, resolved at parse time
    std::uint64_t master_seed = 0;
    std::string output_dir = "run";

    // backend
    model_client::BackendKind backend_kind = model_client::BackendKind::scripted;
    std::string base_url;
    std::string model_name = "text-davinci-002";
    std::string api_key_env = "ICLH_API_KEY";
    double temperature = 0.0;
    int max_tokens = 16; // bandit default 8, resolved at parse time
    double timeout_s = 30.0;
    int max_retries = 3;
    double backoff_base_s = 0.5;
    bool chat_zero_shot_fallback = false;
    scripted::AgentParams scripted_params;

    // task generation
    tasks::FunctionTaskParams function_params;
    tasks::BanditTaskParams bandit_params;
    std::string datasets_dir;
    int points_per_task = 5;

    // analysis / baselines
    bool standardize = true;
    double rbf_gamma = 0.2; // 1 / feature dimension in normalized space
    bool noise_free_targets = true;
    double ucb_weight = 1.0;
    double blr_noise_variance = 1.0;
    forest::ForestConfig forest_config;

    // runner
    bool prior_probes = false;
    int workers = 4;
    bool save_transcripts = true;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    void validate() const;

    model_client::BackendConfig backend_config() const;
};

// Load a JSON config file, then apply dotted-key overrides ("a.b=3").
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

void apply_override(nlohmann::json& j, const std::string& assignment);

} // namespace iclh::config
