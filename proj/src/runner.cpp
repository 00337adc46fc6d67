#include "iclh/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "iclh/analysis.hpp"
#include "iclh/baselines.hpp"
#include "iclh/errors.hpp"
#include "iclh/parallel.hpp"
#include "iclh/prompts.hpp"
#include "iclh/random_forest.hpp"
#include "iclh/scripted_agents.hpp"

namespace iclh::runner {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSimStream = 0x53494d53ULL;

// per-simulation substreams
enum Substream : std::uint64_t {
    kTaskStream = 1,
    kPromptStream = 2,
    kAgentStream = 3,
    kGreedyStream = 4,
    kUcbStream = 5,
    kForestStream = 6,
};

double round1(double v) { return std::round(v * 10.0) / 10.0; }
double round2(double v) { return std::round(v * 100.0) / 100.0; }

} // namespace

std::vector<tasks::Dataset> load_prepared_datasets(const std::string& dir) {
    std::vector<tasks::Dataset> out;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        try {
            out.push_back(tasks::prepare_dataset(path.string()));
        } catch (const IngestError&) {
            // ineligible dataset (too few features, constant columns, ...)
        }
    }
    return out;
}

Runner::Runner(config::RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.experiment == config::Experiment::regression) {
        datasets_ = load_prepared_datasets(cfg_.datasets_dir);
        if (datasets_.size() < static_cast<std::size_t>(cfg_.n_tasks))
            throw ConfigError("regression experiment needs at least " +
                              std::to_string(cfg_.n_tasks) + " eligible datasets, found " +
                              std::to_string(datasets_.size()));
    }
}

std::uint64_t Runner::simulation_seed(int sim) const {
    return derive_seed(cfg_.master_seed, kSimStream, static_cast<std::uint64_t>(sim));
}

std::unique_ptr<model_client::ModelClient> Runner::make_client(int sim) const {
    if (cfg_.backend_kind == model_client::BackendKind::scripted) {
        scripted::AgentParams params = cfg_.scripted_params;
        params.seed = derive_seed(simulation_seed(sim), kAgentStream, 0);
        return scripted::make_scripted_client(params);
    }
    return std::make_unique<model_client::HttpModelClient>(cfg_.backend_config());
}

namespace {

struct QueryContext {
    model_client::ModelClient& client;
    const config::RunConfig& cfg;
    std::vector<records::Transcript>& transcripts;

    std::string ask(const std::string& prompt, const std::string& experiment,
                    bool first_trial = false) {
        model_client::CompletionRequest req;
        req.prompt = prompt;
        req.temperature = cfg.temperature;
        req.max_tokens = cfg.max_tokens;
        req.model_name = cfg.model_name;
        if (first_trial && cfg.chat_zero_shot_fallback &&
            cfg.backend_kind == model_client::BackendKind::http_chat)
            req.system_message = model_client::kZeroShotFallbackSystemMessage;
        std::string completion = client.complete(req);
        records::Transcript tr;
        tr.experiment = experiment;
        tr.prompt_text = prompt;
        tr.completion_text = completion;
        tr.timestamp_utc = records::utc_now_iso8601();
        transcripts.push_back(tr);
        return completion;
    }
};

baselines::BlrPrior oracle_function_prior(const tasks::FunctionTaskParams& p,
                                          double fallback_noise) {
    baselines::BlrPrior prior;
    prior.mean = Eigen::Vector2d(p.slope_mean, p.intercept_mean);
    prior.covariance = Eigen::Vector2d(p.slope_sd * p.slope_sd, p.intercept_sd * p.intercept_sd)
                           .asDiagonal();
    prior.noise_variance = p.noise_sd > 0.0 ? p.noise_sd * p.noise_sd : fallback_noise;
    return prior;
}

baselines::BlrPosterior fit_blr_on_history(
    const std::vector<prompts::FunctionHistory::Obs>& obs, const baselines::BlrPrior& prior) {
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

SimulationResult Runner::simulate_function(int sim) const {
    SimulationResult result;
    result.simulation = sim;
    auto sim_seed = simulation_seed(sim);
    Rng task_rng(derive_seed(sim_seed, kTaskStream, 0));
    auto client = make_client(sim);
    QueryContext ctx{*client, cfg_, result.transcripts};

    prompts::FunctionHistory history;
    history.n_tasks_total = cfg_.n_tasks;

    auto default_prior = baselines::BlrPrior::standard_normal(2, cfg_.blr_noise_variance);
    auto oracle_prior = oracle_function_prior(cfg_.function_params, cfg_.blr_noise_variance);

    for (int t = 1; t <= cfg_.n_tasks; ++t) {
        if (cfg_.prior_probes) {
            analysis::FunctionPriorProbeConfig probe_cfg;
            probe_cfg.n_tasks_total = cfg_.n_tasks;
            probe_cfg.grid_low = cfg_.function_params.input_low;
            probe_cfg.grid_high = cfg_.function_params.input_high;
            try {
                auto est = analysis::estimate_function_prior(*client, history, probe_cfg);
                result.prior_samples.push_back({{"sim", sim},
                                                {"task", t},
                                                {"slope", est.slope},
                                                {"intercept", est.intercept},
                                                {"n_points", est.n_points_used}});
            } catch (const FitError&) {
                // all probe answers were outliers; nothing to record
            }
        }

        tasks::FunctionTask task = tasks::sample_function_task(task_rng, cfg_.function_params);
        history.tasks.emplace_back();
        for (int trial = 1; trial <= cfg_.trials_per_task; ++trial) {
            auto gen = tasks::gen_function_trial(task, task_rng);
            double target = cfg_.noise_free_targets ? task.value_at(gen.x) : gen.y;

            std::string prompt = prompts::render_function_prompt(history, gen.x);
            std::string completion = ctx.ask(prompt, "function", t == 1 && trial == 1);
            auto parsed = prompts::try_parse_numeric_completion(completion);
            result.transcripts.back().parsed_number = parsed;

            records::TrialRecord rec;
            rec.simulation = sim;
            rec.agent = kSubjectAgent;
            rec.task = t;
            rec.trial = trial;
            rec.input = gen.x;
            rec.raw_completion = completion;
            rec.target = target;
            rec.valid = parsed.has_value();
            if (parsed) {
                rec.prediction = *parsed;
                rec.loss = (*parsed - target) * (*parsed - target);
            }
            rec.transcript = records::content_hash(prompt, completion);
            result.records.push_back(rec);

            // baselines see exactly the data revealed to the subject so far
            Eigen::VectorXd q(2);
            q << gen.x, 1.0;
            for (const auto& [agent, prior] :
                 {std::pair<const char*, const baselines::BlrPrior*>{kBlrDefaultAgent,
                                                                     &default_prior},
                  std::pair<const char*, const baselines::BlrPrior*>{kBlrOracleAgent,
                                                                     &oracle_prior}}) {
                auto post = fit_blr_on_history(history.tasks.back(), *prior);
                double pred = baselines::blr_predict(post, q).mean;
                records::TrialRecord brec;
                brec.simulation = sim;
                brec.agent = agent;
                brec.task = t;
                brec.trial = trial;
                brec.input = gen.x;
                brec.prediction = pred;
                brec.target = target;
                brec.loss = (pred - target) * (pred - target);
                result.records.push_back(brec);
            }

            // reveal the true pair at prompt precision
            history.tasks.back().push_back({gen.x, std::round(gen.y)});
        }
    }
    return result;
}

SimulationResult Runner::simulate_bandit(int sim) const {
    SimulationResult result;
    result.simulation = sim;
    auto sim_seed = simulation_seed(sim);
    Rng task_rng(derive_seed(sim_seed, kTaskStream, 0));
    Rng prompt_rng(derive_seed(sim_seed, kPromptStream, 0));
    Rng greedy_rng(derive_seed(sim_seed, kGreedyStream, 0));
    Rng ucb_rng(derive_seed(sim_seed, kUcbStream, 0));
    auto client = make_client(sim);
    QueryContext ctx{*client, cfg_, result.transcripts};

    tasks::BanditTaskParams task_params = cfg_.bandit_params;
    task_params.trials_per_task = cfg_.trials_per_task;

    prompts::BanditHistory history;
    history.trials_per_task = cfg_.trials_per_task;

    double prior_var = cfg_.bandit_params.mean_sd * cfg_.bandit_params.mean_sd;
    double obs_var = std::max(cfg_.bandit_params.reward_noise_sd *
                                  cfg_.bandit_params.reward_noise_sd,
                              1e-9);

    for (int t = 1; t <= cfg_.n_tasks; ++t) {
        tasks::BanditTask task = tasks::sample_bandit_task(task_rng, task_params);

        if (cfg_.prior_probes) {
            try {
                auto est = analysis::estimate_bandit_prior(*client, history, task.letters[0]);
                result.prior_samples.push_back({{"sim", sim},
                                                {"task", t},
                                                {"letter", std::string(1, task.letters[0])},
                                                {"mean", est.mean},
                                                {"sd", est.sd},
                                                {"n_probes", est.n_probes}});
            } catch (const FitError&) {
            }
        }

        history.casinos.emplace_back();
        baselines::ArmBelief subject_belief; // replayed for bookkeeping only
        baselines::ArmBelief greedy_belief, ucb_belief;
        subject_belief.variance = greedy_belief.variance = ucb_belief.variance = {prior_var,
                                                                                  prior_var};
        double best = std::max(task.arm_means[0], task.arm_means[1]);

        for (int trial = 1; trial <= cfg_.trials_per_task; ++trial) {
            std::string prompt = prompts::render_bandit_prompt(history, task.letters, prompt_rng);
            std::string completion = ctx.ask(prompt, "bandit", t == 1 && trial == 1);
            auto parsed = prompts::try_parse_choice_completion(completion, task.letters);
            result.transcripts.back().parsed_choice = parsed;

            bool valid = parsed.has_value();
            int choice;
            if (valid) {
                choice = *parsed;
            } else {
                // keep the episode going with a random arm; flagged below
                std::uniform_int_distribution<int> coin(0, 1);
                choice = coin(prompt_rng);
            }
            double reward = tasks::bandit_reward(task, choice, task_rng);

            records::TrialRecord rec;
            rec.simulation = sim;
            rec.agent = kSubjectAgent;
            rec.task = t;
            rec.trial = trial;
            rec.input = std::string{task.letters[0], task.letters[1]};
            rec.raw_completion = completion;
            rec.choice = choice;
            rec.reward = reward;
            rec.loss = best - task.arm_means[static_cast<std::size_t>(choice)];
            rec.valid = valid;
            rec.transcript = records::content_hash(prompt, completion);
            result.records.push_back(rec);

            history.casinos.back().push_back({task.letters[static_cast<std::size_t>(choice)],
                                              reward});
            subject_belief = baselines::kalman_update(subject_belief, choice, reward, obs_var);

            // co-simulated policies on fresh reward noise with the same means
            {
                int g = baselines::policy_greedy(greedy_belief, greedy_rng);
                double rg = tasks::bandit_reward(task, g, greedy_rng);
                greedy_belief = baselines::kalman_update(greedy_belief, g, rg, obs_var);
                records::TrialRecord grec;
                grec.simulation = sim;
                grec.agent = kGreedyAgent;
                grec.task = t;
                grec.trial = trial;
                grec.choice = g;
                grec.reward = rg;
                grec.loss = best - task.arm_means[static_cast<std::size_t>(g)];
                result.records.push_back(grec);
            }
            {
                int u = baselines::policy_ucb(ucb_belief, cfg_.ucb_weight);
                double ru = tasks::bandit_reward(task, u, ucb_rng);
                ucb_belief = baselines::kalman_update(ucb_belief, u, ru, obs_var);
                records::TrialRecord urec;
                urec.simulation = sim;
                urec.agent = kUcbAgent;
                urec.task = t;
                urec.trial = trial;
                urec.choice = u;
                urec.reward = ru;
                urec.loss = best - task.arm_means[static_cast<std::size_t>(u)];
                result.records.push_back(urec);
            }
        }
    }
    return result;
}

SimulationResult Runner::simulate_regression(int sim) const {
    SimulationResult result;
    result.simulation = sim;
    auto sim_seed = simulation_seed(sim);
    Rng episode_rng(derive_seed(sim_seed, kTaskStream, 0));
    auto client = make_client(sim);
    QueryContext ctx{*client, cfg_, result.transcripts};

    auto episode = tasks::sample_regression_episode(datasets_, episode_rng, cfg_.n_tasks,
                                                    cfg_.points_per_task);

    prompts::RegressionHistory history;
    history.n_tasks_total = cfg_.n_tasks;

    auto blr_prior = baselines::BlrPrior::standard_normal(6, cfg_.blr_noise_variance);

    for (int t = 1; t <= cfg_.n_tasks; ++t) {
        const auto& draw = episode.tasks[static_cast<std::size_t>(t - 1)];
        const auto& ds = datasets_[draw.dataset_index];
        history.tasks.emplace_back();

        for (int trial = 1; trial <= cfg_.points_per_task; ++trial) {
            std::size_t row = draw.row_indices[static_cast<std::size_t>(trial - 1)];
            std::vector<double> x_display;
            x_display.reserve(draw.feature_indices.size());
            for (std::size_t j : draw.feature_indices)
                x_display.push_back(round2(ds.features[row][j]));
            double target = ds.targets[row];

            std::string prompt = prompts::render_regression_prompt(history, x_display);
            std::string completion = ctx.ask(prompt, "regression", t == 1 && trial == 1);
            auto parsed = prompts::try_parse_numeric_completion(completion);
            result.transcripts.back().parsed_number = parsed;

            records::TrialRecord rec;
            rec.simulation = sim;
            rec.agent = kSubjectAgent;
            rec.task = t;
            rec.trial = trial;
            rec.input = x_display;
            rec.raw_completion = completion;
            rec.target = target;
            rec.valid = parsed.has_value();
            if (parsed) {
                rec.prediction = *parsed;
                rec.loss = (*parsed - target) * (*parsed - target);
            }
            rec.transcript = records::content_hash(prompt, completion);
            result.records.push_back(rec);

            // per-task baselines on the points revealed so far
            const auto& seen = history.tasks.back();
            {
                Eigen::MatrixXd X(static_cast<long>(seen.size()), 6);
                Eigen::VectorXd y(static_cast<long>(seen.size()));
                for (std::size_t i = 0; i < seen.size(); ++i) {
                    for (int j = 0; j < 5; ++j)
                        X(static_cast<long>(i), j) = seen[i].x[static_cast<std::size_t>(j)];
                    X(static_cast<long>(i), 5) = 1.0;
                    y(static_cast<long>(i)) = seen[i].y;
                }
                auto post = baselines::blr_update(blr_prior, X, y);
                Eigen::VectorXd q(6);
                for (int j = 0; j < 5; ++j) q(j) = x_display[static_cast<std::size_t>(j)];
                q(5) = 1.0;
                double pred = baselines::blr_predict(post, q).mean;
                records::TrialRecord brec;
                brec.simulation = sim;
                brec.agent = kBlrDefaultAgent;
                brec.task = t;
                brec.trial = trial;
                brec.input = x_display;
                brec.prediction = pred;
                brec.target = target;
                brec.loss = (pred - target) * (pred - target);
                result.records.push_back(brec);
            }
            {
                double pred = 0.0; // no training data yet: neutral midpoint guess
                if (!seen.empty()) {
                    std::vector<std::vector<double>> X;
                    std::vector<double> y;
                    for (const auto& obs : seen) {
                        X.push_back(obs.x);
                        y.push_back(obs.y);
                    }
                    forest::ForestConfig fc = cfg_.forest_config;
                    fc.seed = derive_seed(sim_seed, kForestStream,
                                          static_cast<std::uint64_t>(t * 1000 + trial));
                    fc.n_threads = 1;
                    auto f = forest::random_forest_fit(X, y, fc);
                    pred = forest::random_forest_predict(f, x_display);
                }
                records::TrialRecord frec;
                frec.simulation = sim;
                frec.agent = kRandomForestAgent;
                frec.task = t;
                frec.trial = trial;
                frec.input = x_display;
                frec.prediction = pred;
                frec.target = target;
                frec.loss = (pred - target) * (pred - target);
                result.records.push_back(frec);
            }

            history.tasks.back().push_back({x_display, round2(target)});
        }
    }
    return result;
}

SimulationResult Runner::run_simulation(int sim) const {
    try {
        switch (cfg_.experiment) {
            case config::Experiment::function: return simulate_function(sim);
            case config::Experiment::bandit: return simulate_bandit(sim);
            case config::Experiment::regression: return simulate_regression(sim);
        }
        throw ContractError("unreachable experiment kind");
    } catch (const TransportError& e) {
        SimulationResult failed;
        failed.simulation = sim;
        failed.complete = false;
        failed.failure = e.what();
        failed.records.clear();
        return failed;
    } catch (const ProtocolError& e) {
        SimulationResult failed;
        failed.simulation = sim;
        failed.complete = false;
        failed.failure = e.what();
        return failed;
    }
}

RunResult Runner::run(std::optional<int> max_new_simulations) {
    records::RunStore store(cfg_.output_dir, cfg_.save_transcripts);
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(cfg_.n_simulations));
    for (int s = 0; s < cfg_.n_simulations; ++s) seeds.push_back(simulation_seed(s));
    store.initialize(cfg_.to_json(), cfg_.master_seed, seeds);

    std::vector<int> pending;
    for (int s = 0; s < cfg_.n_simulations; ++s)
        if (!store.simulation_complete(s)) pending.push_back(s);

    RunResult result;
    result.skipped = cfg_.n_simulations - static_cast<long>(pending.size());
    if (max_new_simulations && static_cast<long>(pending.size()) > *max_new_simulations)
        pending.resize(static_cast<std::size_t>(*max_new_simulations));

    // simulations run in parallel batches; records land on disk in
    // simulation order so resumed and uninterrupted runs match byte for byte
    std::size_t batch = static_cast<std::size_t>(std::max(1, cfg_.workers));
    for (std::size_t start = 0; start < pending.size(); start += batch) {
        std::size_t count = std::min(batch, pending.size() - start);
        std::vector<SimulationResult> results(count);
        parallel::parallel_for(static_cast<long>(count), cfg_.workers, [&](long i) {
            results[static_cast<std::size_t>(i)] =
                run_simulation(pending[start + static_cast<std::size_t>(i)]);
        });
        for (auto& sr : results) {
            if (!sr.complete) {
                ++result.incomplete;
                std::cerr << "simulation " << sr.simulation << " incomplete: " << sr.failure
                          << "\n";
                continue;
            }
            store.append_simulation(sr.simulation, sr.records, sr.prior_samples,
                                    sr.transcripts);
            ++result.completed;
            for (const auto& rec : sr.records)
                if (!rec.valid) ++result.invalid_trials;
        }
    }
    return result;
}

} // namespace iclh::runner
