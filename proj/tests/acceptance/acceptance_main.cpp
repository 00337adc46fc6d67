// Acceptance suite: one criterion per function, one pass/fail line per
// criterion. Run all with no arguments or a single one with --criterion N.
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iclh/analysis.hpp"
#include "iclh/baselines.hpp"
#include "iclh/config.hpp"
#include "iclh/errors.hpp"
#include "iclh/parallel.hpp"
#include "iclh/prompts.hpp"
#include "iclh/records.hpp"
#include "iclh/rng.hpp"
#include "iclh/runner.hpp"
#include "iclh/stats.hpp"
#include "iclh/tasks.hpp"

namespace fs = std::filesystem;
using namespace iclh;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

// --- 1: the published (coefficient, ±, statistic) triples are mutually ----
// consistent under the convention ± = 1.96 * (beta / statistic).
Result criterion_1() {
    struct Triple {
        double beta, halfwidth, statistic;
    };
    const std::vector<Triple> triples = {
        // learning-curve regressions (t statistics)
        {-30.614, 3.08, -19.514},
        {-13.26, 3.08, -8.455},
        {-0.221, 0.012, -35.828},
        {-0.031, 0.012, -5.002},
        {-0.089, 0.020, -9.204},
        {-0.147, 0.020, -15.223},
        {-0.133, 0.024, -10.858},
        {-0.196, 0.024, -15.963},
        // strategy probit coefficients (z statistics)
        {0.307, 0.027, 21.759},
        {0.128, 0.025, 9.633},
        {-0.160, 0.010, -31.788},
        {0.046, 0.010, 9.279},
    };
    double worst = 0.0;
    for (const auto& t : triples) {
        double implied = 1.96 * (t.beta / t.statistic);
        worst = std::max(worst, std::abs(implied - t.halfwidth));
    }
    return {worst < 0.01,
            std::to_string(triples.size()) + " triples, worst |implied - reported| = " + fmt(worst)};
}

// --- 2: conjugate BLR vs a brute-force explicit-inversion oracle ---------
Result criterion_2() {
    Rng rng(20240202);
    std::uniform_int_distribution<int> dim_dist(1, 5), n_dist(0, 15);
    std::uniform_real_distribution<double> unit(-2.0, 2.0), noise_dist(0.1, 4.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int d = dim_dist(rng);
        int n = n_dist(rng);
        baselines::BlrPrior prior;
        prior.mean = Eigen::VectorXd::NullaryExpr(d, [&] { return unit(rng); });
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return unit(rng); });
        prior.covariance = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
        prior.noise_variance = noise_dist(rng);
        Eigen::MatrixXd X = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return unit(rng); });
        Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(n, [&] { return unit(rng); });

        auto post = baselines::blr_update(prior, X, y);

        Eigen::MatrixXd prec = prior.covariance.inverse() +
                               X.transpose() * X / prior.noise_variance;
        Eigen::MatrixXd cov = prec.inverse();
        Eigen::VectorXd mean = cov * (prior.covariance.inverse() * prior.mean +
                                      X.transpose() * y / prior.noise_variance);
        worst = std::max(worst, (post.mean - mean).cwiseAbs().maxCoeff());
        worst = std::max(worst, (post.covariance - cov).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-8, "1000 problems, max elementwise error = " + fmt(worst)};
}

// --- 3: Kalman filtering equals intercept-only BLR -----------------------
Result criterion_3() {
    Rng rng(20240303);
    std::uniform_int_distribution<int> len_dist(1, 20);
    std::uniform_real_distribution<double> prior_var_dist(1.0, 100.0),
        obs_var_dist(0.5, 50.0), reward_dist(-20.0, 20.0);
    double worst = 0.0;
    for (int stream = 0; stream < 1000; ++stream) {
        double prior_var = prior_var_dist(rng);
        double obs_var = obs_var_dist(rng);
        baselines::ArmBelief belief;
        belief.variance = {prior_var, prior_var};
        baselines::BlrPrior prior;
        prior.mean = Eigen::VectorXd::Zero(1);
        prior.covariance = Eigen::MatrixXd::Constant(1, 1, prior_var);
        prior.noise_variance = obs_var;
        int len = len_dist(rng);
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(len, 1);
        Eigen::VectorXd y(len);
        for (int i = 0; i < len; ++i) {
            y(i) = reward_dist(rng);
            belief = baselines::kalman_update(belief, 0, y(i), obs_var);
            auto post = baselines::blr_update(
                prior, X.topRows(i + 1), y.head(i + 1));
            worst = std::max(worst, std::abs(belief.mean[0] - post.mean(0)));
            worst = std::max(worst, std::abs(belief.variance[0] - post.covariance(0, 0)));
        }
    }
    return {worst < 1e-10, "1000 streams, max error = " + fmt(worst)};
}

// --- 4: probit recovery of known strategy weights ------------------------
Result criterion_4() {
    const std::array<double, 6> truth = {0.3, -0.16, -0.4, 0.128, 0.046, 0.0};
    const int n_reps = 200;
    const int n_episodes = 500;
    const tasks::BanditTaskParams params;
    std::array<std::atomic<int>, 6> covered{};
    std::atomic<int> fit_failures{0};

    parallel::parallel_for(n_reps, 4, [&](long rep) {
        Rng rng(derive_seed(20240404, 0xACCE5511, static_cast<std::uint64_t>(rep)));
        std::normal_distribution<double> mean_dist(0.0, params.mean_sd),
            noise_dist(0.0, params.reward_noise_sd);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<analysis::BanditTrialObs> records;
        records.reserve(static_cast<std::size_t>(n_episodes) * 50);
        for (int ep = 0; ep < n_episodes; ++ep) {
            for (int task = 1; task <= 5; ++task) {
                std::array<double, 2> arms{mean_dist(rng), mean_dist(rng)};
                baselines::ArmBelief belief;
                belief.variance = {64.0, 64.0};
                for (int trial = 1; trial <= 10; ++trial) {
                    auto reg = baselines::belief_regressors(belief);
                    double c = static_cast<double>(task - 1);
                    double eta = (truth[0] + c * truth[3]) * reg.value_diff +
                                 (truth[1] + c * truth[4]) * reg.relative_unc +
                                 (truth[2] + c * truth[5]) * reg.scaled_value_diff;
                    int choice = unit(rng) < stats::normal_cdf(eta) ? 0 : 1;
                    double reward =
                        std::round((arms[static_cast<std::size_t>(choice)] + noise_dist(rng)) *
                                   10.0) /
                        10.0;
                    records.push_back({ep, task, trial, choice, reward, true});
                    belief = baselines::kalman_update(belief, choice, reward, 32.0);
                }
            }
        }
        try {
            auto fit = analysis::fit_strategy_regression(records, {64.0, 32.0});
            for (int i = 0; i < 6; ++i)
                if (std::abs(fit.beta(i) - truth[static_cast<std::size_t>(i)]) <=
                    1.96 * fit.standard_errors(i))
                    ++covered[static_cast<std::size_t>(i)];
        } catch (const FitError&) {
            ++fit_failures;
        }
    });

    int min_covered = n_reps;
    std::ostringstream detail;
    detail << "coverage/" << n_reps << ":";
    for (int i = 0; i < 6; ++i) {
        min_covered = std::min(min_covered, covered[static_cast<std::size_t>(i)].load());
        detail << " " << covered[static_cast<std::size_t>(i)].load();
    }
    if (fit_failures > 0) detail << ", " << fit_failures << " fit failures";
    bool pass = min_covered >= 180 && fit_failures == 0;
    return {pass, detail.str()};
}

// Shared helper for 5 and 6: run a scripted experiment and return the
// subject rows of its record log.
std::vector<records::TrialRecord> run_scripted(config::RunConfig cfg, const std::string& dir_name) {
    fs::path dir = fresh_dir(dir_name);
    cfg.output_dir = dir.string();
    cfg.save_transcripts = false;
    runner::Runner r(cfg);
    r.run();
    auto all = records::read_records(dir / "records.jsonl");
    std::vector<records::TrialRecord> subject;
    for (auto& rec : all)
        if (rec.agent == runner::kSubjectAgent) subject.push_back(std::move(rec));
    fs::remove_all(dir);
    return subject;
}

std::vector<analysis::BanditTrialObs> to_obs(const std::vector<records::TrialRecord>& recs) {
    std::vector<analysis::BanditTrialObs> obs;
    obs.reserve(recs.size());
    for (const auto& r : recs)
        obs.push_back({r.simulation, r.task, r.trial, r.choice.value_or(0),
                       r.reward.value_or(0.0), r.valid});
    return obs;
}

// --- 5: the decomposition labels scripted strategies correctly -----------
Result criterion_5() {
    config::RunConfig cfg = config::RunConfig::from_json({{"experiment", "bandit"}});
    cfg.n_simulations = 300;
    cfg.master_seed = 505;
    cfg.workers = 4;
    cfg.scripted_params.kind = scripted::AgentKind::kalman_thompson;
    auto thompson_fit = analysis::fit_strategy_regression(
        to_obs(run_scripted(cfg, "iclh_acc5_thompson")), {64.0, 32.0});
    // name order: value_diff, relative_unc, scaled_value_diff, then interactions
    bool thompson_ok = thompson_fit.p_values(2) < 0.01 && thompson_fit.beta(2) > 0.0 &&
                       thompson_fit.p_values(0) > 0.01 && thompson_fit.p_values(1) > 0.01;

    cfg.master_seed = 506;
    cfg.n_simulations = 100;
    cfg.scripted_params.kind = scripted::AgentKind::kalman_greedy;
    auto greedy_fit = analysis::fit_strategy_regression(
        to_obs(run_scripted(cfg, "iclh_acc5_greedy")), {64.0, 32.0});
    bool greedy_ok = greedy_fit.beta(0) > 2.0;

    std::ostringstream detail;
    detail << "thompson: w_T=" << fmt(thompson_fit.beta(2)) << " (p=" << fmt(thompson_fit.p_values(2))
           << "), p(w_B)=" << fmt(thompson_fit.p_values(0))
           << ", p(w_U)=" << fmt(thompson_fit.p_values(1))
           << "; greedy: w_B=" << fmt(greedy_fit.beta(0))
           << (greedy_fit.quasi_separation ? " (separated)" : "");
    return {thompson_ok && greedy_ok, detail.str()};
}

// Per-trial absolute error regressed on the task and trial indices. The raw
// squared error is so heavy-tailed (early-task errors reach ~1e5) that its
// variance drowns the slope; the root scale keeps the same monotone signature
// with usable power.
analysis::RegressionFit loss_effects(const std::vector<records::TrialRecord>& recs) {
    long n = static_cast<long>(recs.size());
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (long i = 0; i < n; ++i) {
        const auto& r = recs[static_cast<std::size_t>(i)];
        X(i, 0) = r.task;
        X(i, 1) = r.trial;
        y(i) = std::sqrt(r.loss.value_or(0.0));
    }
    return analysis::ols_fit(X, y, {"task", "trial"}, true);
}

// --- 6: end-to-end recovery of the meta-learning signature ---------------
Result criterion_6() {
    config::RunConfig cfg = config::RunConfig::from_json({{"experiment", "function"}});
    cfg.n_simulations = 100;
    cfg.master_seed = 606;
    cfg.workers = 4;
    cfg.scripted_params.kind = scripted::AgentKind::meta_blr_mean;
    auto meta = loss_effects(run_scripted(cfg, "iclh_acc6_meta"));
    bool meta_ok = meta.beta(0) < 0.0 && meta.p_values(0) < 0.01 &&
                   meta.beta(1) < 0.0 && meta.p_values(1) < 0.01;

    cfg.master_seed = 607;
    cfg.scripted_params.kind = scripted::AgentKind::blr_mean;
    auto flat = loss_effects(run_scripted(cfg, "iclh_acc6_flat"));
    bool flat_ok = flat.beta(1) < 0.0 && flat.p_values(1) < 0.01 &&
                   std::abs(flat.statistics(0)) < 2.0;

    std::ostringstream detail;
    detail << "meta-aware: t(task)=" << fmt(meta.statistics(0)) << ", t(trial)="
           << fmt(meta.statistics(1)) << "; memoryless: t(task)=" << fmt(flat.statistics(0))
           << ", t(trial)=" << fmt(flat.statistics(1));
    return {meta_ok && flat_ok, detail.str()};
}

// --- 7: regret ordering of the bandit baselines --------------------------
Result criterion_7() {
    const int n_tasks = 500;
    tasks::BanditTaskParams params;
    std::vector<double> greedy_regret, ucb_regret, random_regret;
    Rng rng(20240707);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < n_tasks; ++i) {
        auto task = tasks::sample_bandit_task(rng, params);
        auto run_policy = [&](auto&& pick) {
            auto belief = baselines::ArmBelief::prior(params.mean_sd);
            std::vector<int> choices;
            for (int t = 0; t < params.trials_per_task; ++t) {
                int arm = pick(belief);
                choices.push_back(arm);
                double reward = tasks::bandit_reward(task, arm, rng);
                belief = baselines::kalman_update(belief, arm, reward,
                                                  params.reward_noise_sd *
                                                      params.reward_noise_sd);
            }
            auto regret = analysis::compute_regret(task, choices);
            double total = 0.0;
            for (double r : regret) total += r;
            return total;
        };
        greedy_regret.push_back(
            run_policy([&](const baselines::ArmBelief& b) { return baselines::policy_greedy(b, rng); }));
        ucb_regret.push_back(
            run_policy([&](const baselines::ArmBelief& b) { return baselines::policy_ucb(b, 1.0); }));
        random_regret.push_back(run_policy([&](const baselines::ArmBelief&) { return coin(rng); }));
    }
    double m_greedy = stats::mean(greedy_regret);
    double m_ucb = stats::mean(ucb_regret);
    double m_random = stats::mean(random_regret);
    auto outer = stats::welch_test(ucb_regret, random_regret); // alternative: ucb < random
    bool pass = m_ucb <= m_greedy && m_greedy <= m_random && outer.p_one_sided < 0.01;
    std::ostringstream detail;
    detail << "mean regret ucb=" << fmt(m_ucb) << " greedy=" << fmt(m_greedy)
           << " random=" << fmt(m_random) << ", outer-pair p=" << fmt(outer.p_one_sided);
    return {pass, detail.str()};
}

// --- 8: prompt boxes reproduced byte-identically -------------------------
Result criterion_8() {
    prompts::FunctionHistory fh;
    fh.tasks = {{{10, -120}, {90, -280}},
                {{33, -160}, {70, -250}},
                {{5, -110}, {44, -190}},
                {{81, -260}, {12, -130}},
                {{52, -209}, {18, -138}}};
    const std::string function_expected =
        "You observe 5 machines that produce an output y for a given input x.\n"
        "Each machine implements a different function.\n\n"
        "Machine 1:\nx=10, y=-120;\nx=90, y=-280;\n\n"
        "Machine 2:\nx=33, y=-160;\nx=70, y=-250;\n\n"
        "Machine 3:\nx=5, y=-110;\nx=44, y=-190;\n\n"
        "Machine 4:\nx=81, y=-260;\nx=12, y=-130;\n\n"
        "Machine 5:\nx=52, y=-209;\nx=18, y=-138;\nx=60, y=";
    bool fn_ok = prompts::render_function_prompt(fh, 60.0) == function_expected;

    prompts::BanditHistory bh;
    bh.casinos = {{{'A', 1.0}, {'B', -2.0}},
                  {{'C', 3.5}, {'C', 2.0}},
                  {{'D', 0.1}, {'E', -0.4}},
                  {{'G', 7.7}, {'G', 8.1}},
                  {{'J', 4.2}, {'F', -7.4}, {'J', 3.2}, {'J', 3.9}}};
    const std::string bandit_expected =
        "You are going to different casinos that own two slot machines.\n"
        "Choosing the same slot machine will not always give you the same points, but one "
        "slot machine is always better than the other. Within a casino, your goal is to "
        "choose the slot machine that will give you the most points over the course of 10 "
        "trials.\n"
        "Each casino owns a different pair of machine.\n\n"
        "You have received the following points when playing in casino 1:\n"
        "- Machine A delivered 1.0 points.\n"
        "- Machine B delivered -2.0 points.\n\n"
        "You have received the following points when playing in casino 2:\n"
        "- Machine C delivered 3.5 points.\n"
        "- Machine C delivered 2.0 points.\n\n"
        "You have received the following points when playing in casino 3:\n"
        "- Machine D delivered 0.1 points.\n"
        "- Machine E delivered -0.4 points.\n\n"
        "You have received the following points when playing in casino 4:\n"
        "- Machine G delivered 7.7 points.\n"
        "- Machine G delivered 8.1 points.\n\n"
        "You have received the following points when playing in casino 5:\n"
        "- Machine J delivered 4.2 points.\n"
        "- Machine F delivered -7.4 points.\n"
        "- Machine J delivered 3.2 points.\n"
        "- Machine J delivered 3.9 points.\n\n"
        "Q: We are now performing trial 5 in casino 5. Which machine do you choose between "
        "machine J and machine F?\n"
        "A: Machine";
    // the question letter order is a per-render fair coin; find a draw that
    // keeps the canonical order, then compare every byte
    bool bandit_ok = false;
    for (std::uint64_t seed = 0; seed < 64 && !bandit_ok; ++seed) {
        Rng rng(seed);
        bandit_ok = prompts::render_bandit_prompt(bh, {'J', 'F'}, rng) == bandit_expected;
    }

    prompts::RegressionHistory rh;
    rh.tasks = {{{{0.1, 0.2, 0.3, 0.4, 0.5}, 0.2}},
                {{{0.0, 0.0, 0.0, 0.0, 0.0}, 0.0}},
                {{{-1.0, 1.0, 0.5, -0.5, 0.25}, -0.1}},
                {{{0.9, 0.8, 0.7, 0.6, 0.5}, 0.4}},
                {{{-0.81, -0.16, -0.78, -0.77, -0.45}, -0.34},
                 {{-0.81, -0.63, -0.75, -0.83, -0.55}, -0.68},
                 {{-0.79, -0.71, -0.76, -0.8, -0.45}, -0.75},
                 {{-0.2, -0.3, -0.28, -0.11, -0.18}, 1.0}}};
    const std::string regression_expected =
        "You observe an input vector x and have to predict the corresponding output y as "
        "accurately as possible. You are given 5 different tasks.\n\n"
        "Task 1:\nx=[ 0.1, 0.2, 0.3, 0.4, 0.5], y= 0.2;\n\n"
        "Task 2:\nx=[ 0.0, 0.0, 0.0, 0.0, 0.0], y= 0.0;\n\n"
        "Task 3:\nx=[ -1.0, 1.0, 0.5, -0.5, 0.25], y= -0.1;\n\n"
        "Task 4:\nx=[ 0.9, 0.8, 0.7, 0.6, 0.5], y= 0.4;\n\n"
        "Task 5:\n"
        "x=[ -0.81, -0.16, -0.78, -0.77, -0.45], y= -0.34;\n"
        "x=[ -0.81, -0.63, -0.75, -0.83, -0.55], y= -0.68;\n"
        "x=[ -0.79, -0.71, -0.76, -0.8, -0.45], y= -0.75;\n"
        "x=[ -0.2, -0.3, -0.28, -0.11, -0.18], y= 1.0;\n"
        "x=[ -0.97, -0.92, -0.97, -0.97, -0.82], y=";
    bool reg_ok = prompts::render_regression_prompt(rh, {-0.97, -0.92, -0.97, -0.97, -0.82}) ==
                  regression_expected;

    std::ostringstream detail;
    detail << "function " << (fn_ok ? "ok" : "MISMATCH") << ", bandit "
           << (bandit_ok ? "ok" : "MISMATCH") << ", regression " << (reg_ok ? "ok" : "MISMATCH");
    return {fn_ok && bandit_ok && reg_ok, detail.str()};
}

// --- 9: analytic probit score vs central finite differences --------------
Result criterion_9() {
    Rng rng(20240909);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
        const long n = 40, p = 4;
        Eigen::MatrixXd X = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return normal(rng); });
        Eigen::VectorXd beta = Eigen::VectorXd::NullaryExpr(p, [&] { return normal(rng) * 0.5; });
        Eigen::VectorXi y(n);
        for (long i = 0; i < n; ++i) y(i) = unit(rng) < 0.5 ? 0 : 1;

        Eigen::VectorXd analytic = analysis::probit_score(X, y, beta);
        Eigen::VectorXd numeric(p);
        for (long j = 0; j < p; ++j) {
            Eigen::VectorXd hi = beta, lo = beta;
            hi(j) += h;
            lo(j) -= h;
            numeric(j) = (analysis::probit_log_likelihood(X, y, hi) -
                          analysis::probit_log_likelihood(X, y, lo)) /
                         (2.0 * h);
        }
        double rel = (analytic - numeric).norm() / std::max(1.0, analytic.norm());
        worst = std::max(worst, rel);
    }
    return {worst < 1e-4, "100 points, worst relative error = " + fmt(worst)};
}

// --- 10: byte-identical record logs from the same master seed ------------
Result criterion_10() {
    config::RunConfig cfg = config::RunConfig::from_json({{"experiment", "bandit"}});
    cfg.n_simulations = 8;
    cfg.master_seed = 1010;
    cfg.scripted_params.kind = scripted::AgentKind::hybrid_probit;
    cfg.scripted_params.hybrid_main = {0.3, -0.16, -0.4};
    cfg.scripted_params.hybrid_interaction = {0.128, 0.046, 0.0};
    cfg.save_transcripts = false;

    auto read_all = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };

    fs::path dir_a = fresh_dir("iclh_acc10_a"), dir_b = fresh_dir("iclh_acc10_b");
    cfg.output_dir = dir_a.string();
    cfg.workers = 1;
    runner::Runner(cfg).run();
    cfg.output_dir = dir_b.string();
    cfg.workers = 4;
    runner::Runner(cfg).run();
    std::string bytes_a = read_all(dir_a / "records.jsonl");
    std::string bytes_b = read_all(dir_b / "records.jsonl");
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    bool pass = !bytes_a.empty() && bytes_a == bytes_b;
    return {pass, std::to_string(bytes_a.size()) + " bytes, workers 1 vs 4 " +
                      (pass ? "identical" : "DIFFER")};
}

// --- 11: feature-selection and similarity oracles ------------------------
std::vector<std::size_t> brute_force_select(const tasks::Dataset& ds, std::size_t k) {
    const double n = static_cast<double>(ds.rows());
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t j = 0; j < ds.cols(); ++j) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            double x = ds.features[i][j], y = ds.targets[i];
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
        double f = 0.0;
        if (vx > 0.0 && vy > 0.0) {
            double r2 = (cxy * cxy) / (vx * vy);
            double ss_reg = r2 * vy;
            double ss_res = vy - ss_reg;
            f = ss_res > 0.0 ? ss_reg / (ss_res / (n - 2.0)) : std::numeric_limits<double>::max();
        }
        scored.emplace_back(f, j);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) keep.push_back(scored[i].second);
    std::sort(keep.begin(), keep.end());
    return keep;
}

Result criterion_11() {
    Rng rng(20241111);
    std::uniform_int_distribution<int> col_dist(5, 8), row_dist(10, 40);
    std::normal_distribution<double> normal(0.0, 1.0);
    int matched = 0;
    const int n_datasets = 20;
    for (int d = 0; d < n_datasets; ++d) {
        tasks::Dataset ds;
        ds.name = "random";
        int cols = col_dist(rng), rows = row_dist(rng);
        std::vector<double> weights;
        for (int j = 0; j < cols; ++j) weights.push_back(normal(rng));
        for (int i = 0; i < rows; ++i) {
            std::vector<double> row;
            double y = normal(rng);
            for (int j = 0; j < cols; ++j) {
                double x = normal(rng);
                row.push_back(x);
                y += weights[static_cast<std::size_t>(j)] * x;
            }
            ds.features.push_back(row);
            ds.targets.push_back(y);
        }
        for (int j = 0; j < cols; ++j) ds.column_names.push_back("c" + std::to_string(j));
        if (tasks::select_features_f_value(ds, 5) == brute_force_select(ds, 5)) ++matched;
    }

    // one unit of squared distance at gamma = 1 must give exactly exp(-1)
    double sim = analysis::task_similarity({1.0, 0.0}, {{{0.0, 0.0}}}, 1.0);
    double sim_err = std::abs(sim - std::exp(-1.0));
    bool pass = matched == n_datasets && sim_err < 1e-12;
    std::ostringstream detail;
    detail << matched << "/" << n_datasets << " selections match oracle, |similarity - e^-1| = "
           << fmt(sim_err);
    return {pass, detail.str()};
}

using CriterionFn = Result (*)();
const std::array<CriterionFn, 11> kCriteria = {
    criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
            return 2;
        }
    }
    if (only < 0 || only > static_cast<int>(kCriteria.size())) {
        std::fprintf(stderr, "criterion must be in 1..%zu\n", kCriteria.size());
        return 2;
    }
    bool all_pass = true;
    for (int n = 1; n <= static_cast<int>(kCriteria.size()); ++n) {
        if (only != 0 && n != only) continue;
        Result r;
        try {
            r = kCriteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s — %s\n", n, r.pass ? "PASS" : "FAIL", r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}
