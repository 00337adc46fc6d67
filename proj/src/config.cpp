#include "iclh/config.hpp"

#include <cstdlib>
#include <fstream>

#include "iclh/errors.hpp"

namespace iclh::config {

using nlohmann::json;

Experiment experiment_from_string(const std::string& name) {
    if (name == "function") return Experiment::function;
    if (name == "bandit") return Experiment::bandit;
    if (name == "regression") return Experiment::regression;
    throw ConfigError("experiment must be one of function|bandit|regression, got: " + name);
}

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::function: return "function";
        case Experiment::bandit: return "bandit";
        case Experiment::regression: return "regression";
    }
    return "?";
}

namespace {

std::string backend_kind_name(model_client::BackendKind k) {
    switch (k) {
        case model_client::BackendKind::http_completions: return "http_completions";
        case model_client::BackendKind::http_chat: return "http_chat";
        case model_client::BackendKind::scripted: return "scripted";
    }
    return "?";
}

model_client::BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "http_completions") return model_client::BackendKind::http_completions;
    if (name == "http_chat") return model_client::BackendKind::http_chat;
    if (name == "scripted") return model_client::BackendKind::scripted;
    throw ConfigError("backend.kind must be http_completions|http_chat|scripted, got: " + name);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

json RunConfig::to_json() const {
    json j;
    j["experiment"] = to_string(experiment);
    j["n_simulations"] = n_simulations;
    j["n_tasks"] = n_tasks;
    j["trials_per_task"] = trials_per_task;
    j["master_seed"] = master_seed;
    j["output_dir"] = output_dir;

    json b;
    b["kind"] = backend_kind_name(backend_kind);
    b["base_url"] = base_url;
    b["model"] = model_name;
    b["api_key_env"] = api_key_env;
    b["temperature"] = temperature;
    b["max_tokens"] = max_tokens;
    b["timeout_s"] = timeout_s;
    b["max_retries"] = max_retries;
    b["backoff_base_s"] = backoff_base_s;
    b["chat_zero_shot_fallback"] = chat_zero_shot_fallback;
    json s;
    s["agent"] = scripted::to_string(scripted_params.kind);
    s["constant_text"] = scripted_params.constant_text;
    s["linear_slope"] = scripted_params.linear_slope;
    s["linear_intercept"] = scripted_params.linear_intercept;
    s["linear_noise_sd"] = scripted_params.linear_noise_sd;
    s["hybrid_main"] = {scripted_params.hybrid_main.boltzmann, scripted_params.hybrid_main.ucb,
                        scripted_params.hybrid_main.thompson};
    s["hybrid_interaction"] = {scripted_params.hybrid_interaction.boltzmann,
                               scripted_params.hybrid_interaction.ucb,
                               scripted_params.hybrid_interaction.thompson};
    b["scripted"] = s;
    j["backend"] = b;

    json f;
    f["slope_mean"] = function_params.slope_mean;
    f["slope_sd"] = function_params.slope_sd;
    f["intercept_mean"] = function_params.intercept_mean;
    f["intercept_sd"] = function_params.intercept_sd;
    f["noise_sd"] = function_params.noise_sd;
    f["input_low"] = function_params.input_low;
    f["input_high"] = function_params.input_high;
    j["function_task"] = f;

    json bd;
    bd["mean_sd"] = bandit_params.mean_sd;
    bd["reward_noise_sd"] = bandit_params.reward_noise_sd;
    j["bandit_task"] = bd;

    j["datasets_dir"] = datasets_dir;
    j["points_per_task"] = points_per_task;

    json a;
    a["standardize"] = standardize;
    a["rbf_gamma"] = rbf_gamma;
    a["noise_free_targets"] = noise_free_targets;
    a["ucb_weight"] = ucb_weight;
    a["blr_noise_variance"] = blr_noise_variance;
    json rf;
    rf["n_trees"] = forest_config.n_trees;
    rf["max_depth"] = forest_config.max_depth;
    rf["min_leaf"] = forest_config.min_leaf;
    a["random_forest"] = rf;
    j["analysis"] = a;

    j["prior_probes"] = prior_probes;
    j["workers"] = workers;
    j["save_transcripts"] = save_transcripts;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    if (!j.contains("experiment")) throw ConfigError("missing required field: experiment");
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    // protocol defaults depend on the experiment
    c.trials_per_task = c.experiment == Experiment::bandit ? 10 : 5;
    c.max_tokens = c.experiment == Experiment::bandit ? 8 : 16;

    read_if(j, "n_simulations", c.n_simulations);
    read_if(j, "n_tasks", c.n_tasks);
    read_if(j, "trials_per_task", c.trials_per_task);
    read_if(j, "master_seed", c.master_seed);
    read_if(j, "output_dir", c.output_dir);

    if (j.contains("backend")) {
        const json& b = j.at("backend");
        if (b.contains("kind"))
            c.backend_kind = backend_kind_from_string(b.at("kind").get<std::string>());
        read_if(b, "base_url", c.base_url);
        read_if(b, "model", c.model_name);
        read_if(b, "api_key_env", c.api_key_env);
        read_if(b, "temperature", c.temperature);
        read_if(b, "max_tokens", c.max_tokens);
        read_if(b, "timeout_s", c.timeout_s);
        read_if(b, "max_retries", c.max_retries);
        read_if(b, "backoff_base_s", c.backoff_base_s);
        read_if(b, "chat_zero_shot_fallback", c.chat_zero_shot_fallback);
        if (b.contains("scripted")) {
            const json& s = b.at("scripted");
            if (s.contains("agent"))
                c.scripted_params.kind =
                    scripted::agent_kind_from_string(s.at("agent").get<std::string>());
            read_if(s, "constant_text", c.scripted_params.constant_text);
            read_if(s, "linear_slope", c.scripted_params.linear_slope);
            read_if(s, "linear_intercept", c.scripted_params.linear_intercept);
            read_if(s, "linear_noise_sd", c.scripted_params.linear_noise_sd);
            auto read_weights = [&](const char* key, baselines::HybridWeights& w) {
                if (!s.contains(key)) return;
                auto v = s.at(key).get<std::vector<double>>();
                if (v.size() != 3) throw ConfigError(std::string(key) + " must have 3 entries");
                w = {v[0], v[1], v[2]};
            };
            read_weights("hybrid_main", c.scripted_params.hybrid_main);
            read_weights("hybrid_interaction", c.scripted_params.hybrid_interaction);
        }
    }

    if (j.contains("function_task")) {
        const json& f = j.at("function_task");
        read_if(f, "slope_mean", c.function_params.slope_mean);
        read_if(f, "slope_sd", c.function_params.slope_sd);
        read_if(f, "intercept_mean", c.function_params.intercept_mean);
        read_if(f, "intercept_sd", c.function_params.intercept_sd);
        read_if(f, "noise_sd", c.function_params.noise_sd);
        read_if(f, "input_low", c.function_params.input_low);
        read_if(f, "input_high", c.function_params.input_high);
    }
    if (j.contains("bandit_task")) {
        const json& b = j.at("bandit_task");
        read_if(b, "mean_sd", c.bandit_params.mean_sd);
        read_if(b, "reward_noise_sd", c.bandit_params.reward_noise_sd);
    }
    read_if(j, "datasets_dir", c.datasets_dir);
    read_if(j, "points_per_task", c.points_per_task);

    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        read_if(a, "standardize", c.standardize);
        read_if(a, "rbf_gamma", c.rbf_gamma);
        read_if(a, "noise_free_targets", c.noise_free_targets);
        read_if(a, "ucb_weight", c.ucb_weight);
        read_if(a, "blr_noise_variance", c.blr_noise_variance);
        if (a.contains("random_forest")) {
            const json& rf = a.at("random_forest");
            read_if(rf, "n_trees", c.forest_config.n_trees);
            read_if(rf, "max_depth", c.forest_config.max_depth);
            read_if(rf, "min_leaf", c.forest_config.min_leaf);
        }
    }

    read_if(j, "prior_probes", c.prior_probes);
    read_if(j, "workers", c.workers);
    read_if(j, "save_transcripts", c.save_transcripts);

    // keep derived agent parameters in sync with the task distribution
    c.scripted_params.kalman_prior_variance = c.bandit_params.mean_sd * c.bandit_params.mean_sd;
    c.scripted_params.kalman_obs_variance =
        c.bandit_params.reward_noise_sd * c.bandit_params.reward_noise_sd;
    c.scripted_params.ucb_weight = c.ucb_weight;
    c.scripted_params.blr_noise_variance = c.blr_noise_variance;
    c.validate();
    return c;
}

void RunConfig::validate() const {
    if (n_simulations < 1) throw ConfigError("n_simulations must be >= 1");
    if (n_tasks < 1) throw ConfigError("n_tasks must be >= 1");
    if (trials_per_task < 1) throw ConfigError("trials_per_task must be >= 1");
    if (temperature < 0.0 || temperature > 2.0)
        throw ConfigError("backend.temperature must be in [0, 2]");
    if (max_tokens < 1) throw ConfigError("backend.max_tokens must be >= 1");
    if (max_retries < 0) throw ConfigError("backend.max_retries must be >= 0");
    if (timeout_s <= 0.0) throw ConfigError("backend.timeout_s must be > 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (rbf_gamma <= 0.0) throw ConfigError("analysis.rbf_gamma must be > 0");
    if (points_per_task < 1) throw ConfigError("points_per_task must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (backend_kind != model_client::BackendKind::scripted && base_url.empty())
        throw ConfigError("backend.base_url required for http backends");
    if (experiment == Experiment::regression && datasets_dir.empty())
        throw ConfigError("datasets_dir required for the regression experiment");
    function_params.validate();
    bandit_params.validate();
}

model_client::BackendConfig RunConfig::backend_config() const {
    model_client::BackendConfig b;
    b.kind = backend_kind;
    b.base_url = base_url;
    b.timeout_s = timeout_s;
    b.max_retries = max_retries;
    b.backoff_base_s = backoff_base_s;
    if (backend_kind != model_client::BackendKind::scripted) {
        const char* key = std::getenv(api_key_env.c_str());
        if (!key || std::string(key).empty())
            throw ConfigError("API key environment variable is not set: " + api_key_env);
        b.api_key = key;
    }
    return b;
}

void apply_override(json& j, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value, got: " + assignment);
    std::string key = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        auto dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ConfigError("empty key segment in override: " + assignment);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    for (const auto& ov : overrides) apply_override(j, ov);
    return RunConfig::from_json(j);
}

} // namespace iclh::config
