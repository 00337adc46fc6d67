#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iclh/baselines.hpp"
#include "iclh/model_client.hpp"
#include "iclh/prompts.hpp"
#include "iclh/rng.hpp"

namespace iclh::scripted {

enum class AgentKind {
    constant,
    table,
    linear,
    blr_mean,
    meta_blr_mean,
    kalman_greedy,
    kalman_ucb,
    kalman_thompson,
    hybrid_probit,
};

AgentKind agent_kind_from_string(const std::string& name);
std::string to_string(AgentKind kind);

struct AgentParams {
    AgentKind kind = AgentKind::constant;
    std::uint64_t seed = 0;
    std::string constant_text = "0";
    std::map<std::string, std::string> table;
    double linear_slope = 0.0;
    double linear_intercept = 0.0;
    double linear_noise_sd = 0.0;
    double blr_noise_variance = 1.0;
    double kalman_prior_variance = 64.0;
    double kalman_obs_variance = 32.0;
    double ucb_weight = 1.0;
    baselines::HybridWeights hybrid_main{};
    baselines::HybridWeights hybrid_interaction{};
};

// Offline stand-in for a completion backend. Sees only the rendered prompt
// text and answers in the same surface format a model would.
class ScriptedClient : public model_client::ModelClient {
  public:
    explicit ScriptedClient(AgentParams params);
    std::string complete(const model_client::CompletionRequest& request) override;

    const AgentParams& params() const { return params_; }

  private:
    AgentParams params_;
    Rng rng_;

    std::string answer_function(const std::string& prompt);
    std::string answer_bandit(const std::string& prompt);
    std::string answer_regression(const std::string& prompt);
};

std::unique_ptr<ScriptedClient> make_scripted_client(const AgentParams& params);

// --- prompt re-parsing, shared with transcript audit tooling -------------

struct ParsedFunctionPrompt {
    std::vector<std::vector<prompts::FunctionHistory::Obs>> tasks;
    double query_x = 0.0;
};
ParsedFunctionPrompt parse_function_prompt(const std::string& prompt);

struct ParsedBanditPrompt {
    std::vector<std::vector<prompts::BanditHistory::Obs>> casinos;
    std::array<char, 2> question_letters{};
    int trial = 1;
    int casino = 1;
    bool is_prior_probe = false;
    char probe_letter = 0;
};
ParsedBanditPrompt parse_bandit_prompt(const std::string& prompt);

struct ParsedRegressionPrompt {
    std::vector<std::vector<prompts::RegressionHistory::Obs>> tasks;
    std::vector<double> query_x;
};
ParsedRegressionPrompt parse_regression_prompt(const std::string& prompt);

enum class PromptKind { function, bandit, regression, unknown };
PromptKind classify_prompt(const std::string& prompt);

} // namespace iclh::scripted
