#include "iclh/scripted_agents.hpp"

#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "iclh/errors.hpp"

namespace iclh::scripted {

AgentKind agent_kind_from_string(const std::string& name) {
    if (name == "constant") return AgentKind::constant;
    if (name == "table") return AgentKind::table;
    if (name == "linear") return AgentKind::linear;
    if (name == "blr_mean") return AgentKind::blr_mean;
    if (name == "meta_blr_mean") return AgentKind::meta_blr_mean;
    if (name == "kalman_greedy") return AgentKind::kalman_greedy;
    if (name == "kalman_ucb") return AgentKind::kalman_ucb;
    if (name == "kalman_thompson") return AgentKind::kalman_thompson;
    if (name == "hybrid_probit") return AgentKind::hybrid_probit;
    throw ConfigError("unknown scripted agent kind: " + name);
}

std::string to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::constant: return "constant";
        case AgentKind::table: return "table";
        case AgentKind::linear: return "linear";
        case AgentKind::blr_mean: return "blr_mean";
        case AgentKind::meta_blr_mean: return "meta_blr_mean";
        case AgentKind::kalman_greedy: return "kalman_greedy";
        case AgentKind::kalman_ucb: return "kalman_ucb";
        case AgentKind::kalman_thompson: return "kalman_thompson";
        case AgentKind::hybrid_probit: return "hybrid_probit";
    }
    return "?";
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(" ") + buf;
}

} // namespace

PromptKind classify_prompt(const std::string& prompt) {
    if (prompt.rfind("You observe an input vector", 0) == 0) return PromptKind::regression;
    if (prompt.rfind("You observe ", 0) == 0) return PromptKind::function;
    if (prompt.rfind("You are going to different casinos", 0) == 0) return PromptKind::bandit;
    return PromptKind::unknown;
}

ParsedFunctionPrompt parse_function_prompt(const std::string& prompt) {
    static const std::regex machine_re(R"(^Machine (\d+):$)");
    static const std::regex obs_re(R"(^x=(-?\d+), y=(-?\d+);$)");
    static const std::regex query_re(R"(^x=(-?\d+), y=$)");

    ParsedFunctionPrompt out;
    bool saw_query = false;
    std::smatch m;
    for (const auto& line : split_lines(prompt)) {
        if (std::regex_match(line, m, machine_re)) {
            out.tasks.emplace_back();
        } else if (std::regex_match(line, m, obs_re)) {
            if (out.tasks.empty()) throw ParseFailure("observation before any machine block");
            out.tasks.back().push_back({std::stod(m[1]), std::stod(m[2])});
        } else if (std::regex_match(line, m, query_re)) {
            out.query_x = std::stod(m[1]);
            saw_query = true;
        }
    }
    if (!saw_query) throw ParseFailure("function prompt has no query line");
    return out;
}

ParsedBanditPrompt parse_bandit_prompt(const std::string& prompt) {
    static const std::regex casino_re(
        R"(^You have received the following points when playing in casino (\d+):$)");
    static const std::regex obs_re(R"(^- Machine ([A-Z]) delivered (-?\d+\.\d) points\.$)");
    static const std::regex question_re(
        R"(^Q: We are now performing trial (\d+) in casino (\d+)\. Which machine do you choose between machine ([A-Z]) and machine ([A-Z])\?$)");
    static const std::regex probe_re(
        R"(^Q: How rewarding do you expect machine ([A-Z]) to be\?$)");

    ParsedBanditPrompt out;
    bool saw_question = false;
    std::smatch m;
    for (const auto& line : split_lines(prompt)) {
        if (std::regex_match(line, m, casino_re)) {
            out.casinos.emplace_back();
        } else if (std::regex_match(line, m, obs_re)) {
            if (out.casinos.empty()) throw ParseFailure("reward line before any casino block");
            out.casinos.back().push_back({m[1].str()[0], std::stod(m[2])});
        } else if (std::regex_match(line, m, question_re)) {
            out.trial = std::stoi(m[1]);
            out.casino = std::stoi(m[2]);
            out.question_letters = {m[3].str()[0], m[4].str()[0]};
            saw_question = true;
        } else if (std::regex_match(line, m, probe_re)) {
            out.is_prior_probe = true;
            out.probe_letter = m[1].str()[0];
            saw_question = true;
        }
    }
    if (!saw_question) throw ParseFailure("bandit prompt has no question line");
    return out;
}

ParsedRegressionPrompt parse_regression_prompt(const std::string& prompt) {
    static const std::regex task_re(R"(^Task (\d+):$)");
    static const std::regex obs_re(R"(^x=\[ (.*)\], y= (-?\d+(?:\.\d+)?);$)");
    static const std::regex query_re(R"(^x=\[ (.*)\], y=$)");

    auto parse_vec = [](const std::string& body) {
        std::vector<double> v;
        std::stringstream ss(body);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        return v;
    };

    ParsedRegressionPrompt out;
    bool saw_query = false;
    std::smatch m;
    for (const auto& line : split_lines(prompt)) {
        if (std::regex_match(line, m, task_re)) {
            out.tasks.emplace_back();
        } else if (std::regex_match(line, m, obs_re)) {
            if (out.tasks.empty()) throw ParseFailure("observation before any task block");
            out.tasks.back().push_back({parse_vec(m[1]), std::stod(m[2])});
        } else if (std::regex_match(line, m, query_re)) {
            out.query_x = parse_vec(m[1]);
            saw_query = true;
        }
    }
    if (!saw_query) throw ParseFailure("regression prompt has no query line");
    return out;
}

ScriptedClient::ScriptedClient(AgentParams params)
    : params_(std::move(params)), rng_(params_.seed) {}

std::unique_ptr<ScriptedClient> make_scripted_client(const AgentParams& params) {
    return std::make_unique<ScriptedClient>(params);
}

namespace {

// BLR on the observed (x, y) pairs of one task; design is [x, 1].
baselines::BlrPosterior fit_task_blr(const std::vector<prompts::FunctionHistory::Obs>& obs,
                                     const baselines::BlrPrior& prior) {
    Eigen::MatrixXd X(static_cast<long>(obs.size()), 2);
    Eigen::VectorXd y(static_cast<long>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        X(static_cast<long>(i), 0) = obs[i].x;
        X(static_cast<long>(i), 1) = 1.0;
        y(static_cast<long>(i)) = obs[i].y;
    }
    return baselines::blr_update(prior, X, y);
}

} // namespace

std::string ScriptedClient::answer_function(const std::string& prompt) {
    auto parsed = parse_function_prompt(prompt);
    switch (params_.kind) {
        case AgentKind::linear: {
            double y = params_.linear_slope * parsed.query_x + params_.linear_intercept;
            if (params_.linear_noise_sd > 0.0) {
                std::normal_distribution<double> n(0.0, params_.linear_noise_sd);
                y += n(rng_);
            }
            return format_number(y);
        }
        case AgentKind::blr_mean: {
            auto prior = baselines::BlrPrior::standard_normal(2, params_.blr_noise_variance);
            auto post = fit_task_blr(parsed.tasks.empty()
                                         ? std::vector<prompts::FunctionHistory::Obs>{}
                                         : parsed.tasks.back(),
                                     prior);
            Eigen::VectorXd q(2);
            q << parsed.query_x, 1.0;
            return format_number(baselines::blr_predict(post, q).mean);
        }
        case AgentKind::meta_blr_mean: {
            auto prior = baselines::BlrPrior::standard_normal(2, params_.blr_noise_variance);
            // estimate the task distribution from completed tasks and use the
            // average of their posterior means as the prior for the current one
            if (parsed.tasks.size() > 1) {
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
                for (std::size_t t = 0; t + 1 < parsed.tasks.size(); ++t) {
                    auto flat = baselines::BlrPrior::standard_normal(
                        2, params_.blr_noise_variance);
                    acc += fit_task_blr(parsed.tasks[t], flat).mean;
                }
                prior.mean = acc / static_cast<double>(parsed.tasks.size() - 1);
            }
            auto post = fit_task_blr(parsed.tasks.empty()
                                         ? std::vector<prompts::FunctionHistory::Obs>{}
                                         : parsed.tasks.back(),
                                     prior);
            Eigen::VectorXd q(2);
            q << parsed.query_x, 1.0;
            return format_number(baselines::blr_predict(post, q).mean);
        }
        default:
            throw ContractError("scripted agent " + to_string(params_.kind) +
                                " cannot answer function prompts");
    }
}

std::string ScriptedClient::answer_bandit(const std::string& prompt) {
    auto parsed = parse_bandit_prompt(prompt);
    if (parsed.is_prior_probe) {
        // no belief state for an unseen machine: answer the prior mean
        return " 0.0";
    }
    // beliefs indexed in question-letter order
    baselines::ArmBelief belief;
    belief.variance = {params_.kalman_prior_variance, params_.kalman_prior_variance};
    if (!parsed.casinos.empty()) {
        for (const auto& obs : parsed.casinos.back()) {
            int arm = obs.letter == parsed.question_letters[0]
                          ? 0
                          : (obs.letter == parsed.question_letters[1] ? 1 : -1);
            if (arm < 0) continue;
            belief = baselines::kalman_update(belief, arm, obs.reward,
                                              params_.kalman_obs_variance);
        }
    }
    int choice;
    switch (params_.kind) {
        case AgentKind::kalman_greedy:
            choice = baselines::policy_greedy(belief, rng_);
            break;
        case AgentKind::kalman_ucb:
            choice = baselines::policy_ucb(belief, params_.ucb_weight);
            break;
        case AgentKind::kalman_thompson:
            choice = baselines::policy_thompson(belief, rng_);
            break;
        case AgentKind::hybrid_probit: {
            double t0 = static_cast<double>(parsed.casino - 1);
            baselines::HybridWeights w{
                params_.hybrid_main.boltzmann + t0 * params_.hybrid_interaction.boltzmann,
                params_.hybrid_main.ucb + t0 * params_.hybrid_interaction.ucb,
                params_.hybrid_main.thompson + t0 * params_.hybrid_interaction.thompson};
            double p = baselines::hybrid_choice_prob(belief, w);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            choice = u(rng_) < p ? 0 : 1;
            break;
        }
        default:
            throw ContractError("scripted agent " + to_string(params_.kind) +
                                " cannot answer bandit prompts");
    }
    return std::string(" Machine ") + parsed.question_letters[static_cast<std::size_t>(choice)];
}

std::string ScriptedClient::answer_regression(const std::string& prompt) {
    auto parsed = parse_regression_prompt(prompt);
    switch (params_.kind) {
        case AgentKind::blr_mean: {
            auto prior = baselines::BlrPrior::standard_normal(6, params_.blr_noise_variance);
            const auto& task = parsed.tasks.empty()
                                   ? std::vector<prompts::RegressionHistory::Obs>{}
                                   : parsed.tasks.back();
            Eigen::MatrixXd X(static_cast<long>(task.size()), 6);
            Eigen::VectorXd y(static_cast<long>(task.size()));
            for (std::size_t i = 0; i < task.size(); ++i) {
                for (int j = 0; j < 5; ++j)
                    X(static_cast<long>(i), j) = task[i].x[static_cast<std::size_t>(j)];
                X(static_cast<long>(i), 5) = 1.0;
                y(static_cast<long>(i)) = task[i].y;
            }
            auto post = baselines::blr_update(prior, X, y);
            Eigen::VectorXd q(6);
            for (int j = 0; j < 5; ++j) q(j) = parsed.query_x[static_cast<std::size_t>(j)];
            q(5) = 1.0;
            return format_number(baselines::blr_predict(post, q).mean);
        }
        default:
            throw ContractError("scripted agent " + to_string(params_.kind) +
                                " cannot answer regression prompts");
    }
}

std::string ScriptedClient::complete(const model_client::CompletionRequest& request) {
    if (params_.kind == AgentKind::constant) return params_.constant_text;
    if (params_.kind == AgentKind::table) {
        auto it = params_.table.find(request.prompt);
        if (it == params_.table.end())
            throw ContractError("table agent has no entry for this prompt");
        return it->second;
    }
    switch (classify_prompt(request.prompt)) {
        case PromptKind::function: return answer_function(request.prompt);
        case PromptKind::bandit: return answer_bandit(request.prompt);
        case PromptKind::regression: return answer_regression(request.prompt);
        default:
            throw ContractError("scripted agent cannot classify prompt");
    }
}

} // namespace iclh::scripted
