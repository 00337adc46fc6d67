#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <array>

#include "iclh/baselines.hpp"
#include "iclh/prompts.hpp"
#include "iclh/rng.hpp"
#include "iclh/tasks.hpp"

namespace iclh::model_client {
class ModelClient;
}

namespace iclh::analysis {

struct RegressionFit {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd statistics; // t for OLS, z for probit
    Eigen::VectorXd p_values;
    Eigen::VectorXd ci95_halfwidth; // 1.96 * SE
    long n_observations = 0;
    double log_likelihood = 0.0; // probit only
    bool quasi_separation = false;
    int iterations = 0;
};

// OLS with an implicit intercept; optionally z-scores the non-intercept
// predictors first.
RegressionFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>& names, bool standardize);

// Maximum-likelihood probit (Newton with step halving); no implicit intercept.
RegressionFit probit_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                         const std::vector<std::string>& names);

double probit_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                             const Eigen::VectorXd& beta);
Eigen::VectorXd probit_score(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                             const Eigen::VectorXd& beta);

// --- probit strategy design ---------------------------------------------

struct BanditTrialObs {
    int simulation = 0;
    int task = 1;  // 1-based
    int trial = 1; // 1-based
    int choice = 0; // canonical arm index
    double reward = 0.0;
    bool valid = true;
};

struct ProbitDesignRow {
    double value_diff = 0.0;
    double relative_unc = 0.0;
    double scaled_value_diff = 0.0;
    int task_number = 1;
    double task_centered = 0.0; // task_number - 1
    std::array<double, 3> interactions{};
    int choice = 0;
    bool valid = true;
};

struct KalmanParams {
    double prior_variance = 64.0;
    double obs_variance = 32.0;
};

// Replays Kalman filtering over each simulation's (choice, reward) stream and
// emits the decision-variable regressors observed before each choice.
std::vector<ProbitDesignRow> build_probit_design(const std::vector<BanditTrialObs>& records,
                                                 const KalmanParams& params);

// Design rows -> (X, y) for the six-coefficient strategy regression
// (three main effects plus task interactions); invalid rows are skipped.
std::pair<Eigen::MatrixXd, Eigen::VectorXi>
probit_design_matrix(const std::vector<ProbitDesignRow>& rows);

RegressionFit fit_strategy_regression(const std::vector<BanditTrialObs>& records,
                                      const KalmanParams& params);

extern const std::vector<std::string> kStrategyCoefficientNames;

// --- prior elicitation ---------------------------------------------------

struct FunctionPriorEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    int n_points_used = 0;
};

struct BanditPriorEstimate {
    double mean = 0.0;
    double sd = 0.0; // sample SD
    int n_probes = 0;
};

struct FunctionPriorProbeConfig {
    int n_points = 20;
    double grid_low = 0.0;
    double grid_high = 100.0;
    double temperature = 1.0;
    double outlier_abs = 10000.0;
    int n_tasks_total = 5;
};

// Sequential self-fed predictions over an even input grid; the base history
// holds the completed tasks seen so far.
FunctionPriorEstimate estimate_function_prior(model_client::ModelClient& client,
                                              const prompts::FunctionHistory& base_history,
                                              const FunctionPriorProbeConfig& config);

BanditPriorEstimate estimate_bandit_prior(model_client::ModelClient& client,
                                          const prompts::BanditHistory& base_history,
                                          char letter, int n_probes = 5,
                                          double temperature = 1.0);

// --- metrics --------------------------------------------------------------

double task_similarity(const std::vector<double>& current_point,
                       const std::vector<std::vector<std::vector<double>>>& previous_tasks,
                       double gamma);

std::vector<double> compute_regret(const tasks::BanditTask& task,
                                   const std::vector<int>& choices);

struct CellKey {
    int task = 1;
    int trial = 1;
    bool operator<(const CellKey& o) const {
        return task != o.task ? task < o.task : trial < o.trial;
    }
};

struct PredictionRecord {
    int task = 1;
    int trial = 1;
    double prediction = 0.0;
    double target = 0.0;
    bool valid = true;
};

struct ErrorMetrics {
    std::map<CellKey, double> mse;
    std::map<CellKey, double> rmse;
    std::map<int, double> extreme_rate_by_trial; // fraction with |pred| >= 1
    long invalid_count = 0;
};

ErrorMetrics error_metrics(const std::vector<PredictionRecord>& records);

} // namespace iclh::analysis
