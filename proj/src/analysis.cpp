#include "iclh/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "iclh/errors.hpp"
#include "iclh/model_client.hpp"
#include "iclh/prompts.hpp"
#include "iclh/stats.hpp"

namespace iclh::analysis {

namespace {

// z-score columns in place; constant columns are left untouched.
void standardize_columns(Eigen::MatrixXd& X) {
    const double n = static_cast<double>(X.rows());
    for (long j = 0; j < X.cols(); ++j) {
        double m = X.col(j).mean();
        double ss = (X.col(j).array() - m).square().sum();
        double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 0.0) X.col(j) = (X.col(j).array() - m) / sd;
    }
}

} // namespace

RegressionFit ols_fit(const Eigen::MatrixXd& X_in, const Eigen::VectorXd& y,
                      const std::vector<std::string>& names, bool standardize) {
    const long n = X_in.rows();
    const long p = X_in.cols() + 1; // with intercept
    if (n != y.size()) throw ContractError("ols_fit: X and y row counts differ");
    if (n <= p) throw ContractError("ols_fit: need more observations than coefficients");
    if (static_cast<long>(names.size()) != X_in.cols())
        throw ContractError("ols_fit: one name per predictor required");

    Eigen::MatrixXd X(n, p);
    Eigen::MatrixXd pred = X_in;
    if (standardize) standardize_columns(pred);
    X.leftCols(p - 1) = pred;
    X.col(p - 1) = Eigen::VectorXd::Ones(n);

    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) throw FitError("ols_fit: singular design matrix");
    Eigen::MatrixXd xtx_inv = lu.inverse();

    RegressionFit fit;
    fit.names = names;
    fit.names.push_back("intercept");
    fit.beta = xtx_inv * (X.transpose() * y);
    Eigen::VectorXd resid = y - X * fit.beta;
    double rss = resid.squaredNorm();
    double df = static_cast<double>(n - p);
    double sigma2 = rss / df;
    fit.standard_errors = (sigma2 * xtx_inv.diagonal()).array().sqrt();
    fit.statistics.resize(p);
    fit.p_values.resize(p);
    for (long i = 0; i < p; ++i) {
        double se = fit.standard_errors(i);
        fit.statistics(i) = se > 0.0 ? fit.beta(i) / se : 0.0;
        fit.p_values(i) = se > 0.0 ? stats::student_t_two_sided_p(fit.statistics(i), df) : 1.0;
    }
    fit.ci95_halfwidth = 1.96 * fit.standard_errors;
    fit.n_observations = n;
    return fit;
}

namespace {

constexpr double kProbitClamp = 1e-12;

double clamped_cdf(double eta) {
    return std::clamp(stats::normal_cdf(eta), kProbitClamp, 1.0 - kProbitClamp);
}

} // namespace

double probit_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                             const Eigen::VectorXd& beta) {
    double ll = 0.0;
    Eigen::VectorXd eta = X * beta;
    for (long i = 0; i < X.rows(); ++i) {
        double phi = clamped_cdf(eta(i));
        ll += choices(i) == 1 ? std::log(phi) : std::log(1.0 - phi);
    }
    return ll;
}

Eigen::VectorXd probit_score(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                             const Eigen::VectorXd& beta) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(X.cols());
    Eigen::VectorXd eta = X * beta;
    for (long i = 0; i < X.rows(); ++i) {
        double phi = clamped_cdf(eta(i));
        double dens = stats::normal_pdf(eta(i));
        double lambda = choices(i) == 1 ? dens / phi : -dens / (1.0 - phi);
        score += lambda * X.row(i).transpose();
    }
    return score;
}

RegressionFit probit_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& choices,
                         const std::vector<std::string>& names) {
    const long n = X.rows();
    const long p = X.cols();
    if (n != choices.size()) throw ContractError("probit_fit: X and choices row counts differ");
    if (n < 10 * p) throw FitError("probit_fit: fewer than 10 rows per coefficient");
    if (static_cast<long>(names.size()) != p)
        throw ContractError("probit_fit: one name per coefficient required");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = probit_log_likelihood(X, choices, beta);
    const int max_iter = 100;
    const double tol = 1e-8;
    bool converged = false;
    bool separation = false;
    int iter = 0;
    std::ostringstream trace;

    Eigen::MatrixXd info(p, p);
    for (iter = 1; iter <= max_iter; ++iter) {
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
        info.setZero();
        for (long i = 0; i < n; ++i) {
            double phi = clamped_cdf(eta(i));
            double dens = stats::normal_pdf(eta(i));
            double lambda = choices(i) == 1 ? dens / phi : -dens / (1.0 - phi);
            score += lambda * X.row(i).transpose();
            double w = lambda * (lambda + eta(i)); // observed information weight
            if (w > 0.0) info += w * X.row(i).transpose() * X.row(i);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success)
            throw FitError("probit_fit: information matrix not factorizable");
        Eigen::VectorXd step = ldlt.solve(score);

        // step halving until the log-likelihood does not decrease
        double scale = 1.0;
        double new_ll = ll;
        Eigen::VectorXd candidate = beta;
        for (int h = 0; h < 30; ++h) {
            candidate = beta + scale * step;
            new_ll = probit_log_likelihood(X, choices, candidate);
            if (new_ll >= ll - 1e-12) break;
            scale *= 0.5;
        }
        trace << "iter " << iter << " ll " << new_ll << "\n";
        double delta = new_ll - ll;
        beta = candidate;
        ll = new_ll;
        if (beta.lpNorm<Eigen::Infinity>() > 50.0) {
            separation = true; // fitted probabilities pinned at 0/1
            break;
        }
        if (std::fabs(delta) < tol) {
            converged = true;
            break;
        }
    }
    if (!converged && !separation)
        throw FitError("probit_fit: no convergence after " + std::to_string(max_iter) +
                       " iterations\n" + trace.str());

    // SEs from the inverse observed Fisher information at the optimum
    Eigen::VectorXd eta = X * beta;
    info.setZero();
    for (long i = 0; i < n; ++i) {
        double phi = clamped_cdf(eta(i));
        double dens = stats::normal_pdf(eta(i));
        double lambda = choices(i) == 1 ? dens / phi : -dens / (1.0 - phi);
        double w = lambda * (lambda + eta(i));
        if (w > 0.0) info += w * X.row(i).transpose() * X.row(i);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    RegressionFit fit;
    fit.names = names;
    fit.beta = beta;
    fit.n_observations = n;
    fit.log_likelihood = ll;
    fit.quasi_separation = separation;
    fit.iterations = iter;
    if (lu.isInvertible()) {
        Eigen::MatrixXd cov = lu.inverse();
        fit.standard_errors = cov.diagonal().array().max(0.0).sqrt();
    } else {
        fit.standard_errors = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
    }
    fit.statistics.resize(p);
    fit.p_values.resize(p);
    for (long i = 0; i < p; ++i) {
        double se = fit.standard_errors(i);
        fit.statistics(i) = (se > 0.0 && std::isfinite(se)) ? fit.beta(i) / se : 0.0;
        fit.p_values(i) = stats::normal_two_sided_p(fit.statistics(i));
    }
    fit.ci95_halfwidth = 1.96 * fit.standard_errors;
    return fit;
}

const std::vector<std::string> kStrategyCoefficientNames = {
    "value_diff", "relative_unc", "scaled_value_diff",
    "value_diff_x_task", "relative_unc_x_task", "scaled_value_diff_x_task"};

std::vector<ProbitDesignRow> build_probit_design(const std::vector<BanditTrialObs>& records,
                                                 const KalmanParams& params) {
    std::vector<ProbitDesignRow> rows;
    rows.reserve(records.size());
    int cur_sim = std::numeric_limits<int>::min();
    int cur_task = -1;
    int last_trial = 0;
    baselines::ArmBelief belief;
    for (const auto& rec : records) {
        if (rec.simulation < cur_sim ||
            (rec.simulation == cur_sim && (rec.task < cur_task ||
                                           (rec.task == cur_task && rec.trial != last_trial + 1))))
            throw DataIntegrityError("bandit records not ordered by (simulation, task, trial)");
        if (rec.simulation != cur_sim || rec.task != cur_task) {
            cur_sim = rec.simulation;
            cur_task = rec.task;
            belief = baselines::ArmBelief{};
            belief.variance = {params.prior_variance, params.prior_variance};
            if (rec.trial != 1)
                throw DataIntegrityError("task does not start at trial 1");
        }
        last_trial = rec.trial;

        auto reg = baselines::belief_regressors(belief);
        ProbitDesignRow row;
        row.value_diff = reg.value_diff;
        row.relative_unc = reg.relative_unc;
        row.scaled_value_diff = reg.scaled_value_diff;
        row.task_number = rec.task;
        row.task_centered = static_cast<double>(rec.task - 1);
        row.interactions = {row.value_diff * row.task_centered,
                            row.relative_unc * row.task_centered,
                            row.scaled_value_diff * row.task_centered};
        row.choice = rec.choice == 0 ? 1 : 0; // response is "chose arm 0"
        row.valid = rec.valid;
        rows.push_back(row);

        belief = baselines::kalman_update(belief, rec.choice, rec.reward, params.obs_variance);
    }
    return rows;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXi>
probit_design_matrix(const std::vector<ProbitDesignRow>& rows) {
    long n = 0;
    for (const auto& r : rows)
        if (r.valid) ++n;
    Eigen::MatrixXd X(n, 6);
    Eigen::VectorXi y(n);
    long i = 0;
    for (const auto& r : rows) {
        if (!r.valid) continue;
        X(i, 0) = r.value_diff;
        X(i, 1) = r.relative_unc;
        X(i, 2) = r.scaled_value_diff;
        X(i, 3) = r.interactions[0];
        X(i, 4) = r.interactions[1];
        X(i, 5) = r.interactions[2];
        y(i) = r.choice;
        ++i;
    }
    return {X, y};
}

RegressionFit fit_strategy_regression(const std::vector<BanditTrialObs>& records,
                                      const KalmanParams& params) {
    auto rows = build_probit_design(records, params);
    auto [X, y] = probit_design_matrix(rows);
    return probit_fit(X, y, kStrategyCoefficientNames);
}

FunctionPriorEstimate estimate_function_prior(model_client::ModelClient& client,
                                              const prompts::FunctionHistory& base_history,
                                              const FunctionPriorProbeConfig& config) {
    if (config.n_points < 3) throw ContractError("prior probe needs >= 3 grid points");
    prompts::FunctionHistory history = base_history;
    history.tasks.emplace_back(); // probe task, filled with self-fed predictions
    history.n_tasks_total = config.n_tasks_total;

    std::vector<std::pair<double, double>> kept;
    double step = (config.grid_high - config.grid_low) /
                  static_cast<double>(config.n_points - 1);
    for (int i = 0; i < config.n_points; ++i) {
        double x = std::round(config.grid_low + step * static_cast<double>(i));
        model_client::CompletionRequest req;
        req.prompt = prompts::render_function_prompt(history, x);
        req.temperature = config.temperature;
        std::string completion = client.complete(req);
        auto parsed = prompts::try_parse_numeric_completion(completion);
        if (!parsed) continue;
        history.tasks.back().push_back({x, *parsed}); // feed the prediction back
        if (std::fabs(*parsed) < config.outlier_abs) kept.emplace_back(x, *parsed);
    }
    if (kept.size() < 3)
        throw FitError("function prior probe: fewer than 3 usable predictions");

    // OLS line through the surviving (x, prediction) pairs
    double n = static_cast<double>(kept.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (auto [x, y] : kept) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw FitError("function prior probe: degenerate input grid");
    FunctionPriorEstimate est;
    est.slope = (n * sxy - sx * sy) / denom;
    est.intercept = (sy - est.slope * sx) / n;
    est.n_points_used = static_cast<int>(kept.size());
    return est;
}

BanditPriorEstimate estimate_bandit_prior(model_client::ModelClient& client,
                                          const prompts::BanditHistory& base_history,
                                          char letter, int n_probes, double temperature) {
    if (n_probes < 1) throw ContractError("estimate_bandit_prior: n_probes must be >= 1");
    std::vector<double> samples;
    for (int i = 0; i < n_probes; ++i) {
        model_client::CompletionRequest req;
        req.prompt = prompts::render_prior_probe_bandit_with_history(base_history, letter);
        req.temperature = temperature;
        std::string completion = client.complete(req);
        auto parsed = prompts::try_parse_numeric_completion(completion);
        if (parsed) samples.push_back(*parsed);
    }
    if (samples.empty()) throw FitError("bandit prior probe: no parsable answers");
    BanditPriorEstimate est;
    est.mean = stats::mean(samples);
    est.sd = samples.size() > 1 ? stats::sample_sd(samples) : 0.0;
    est.n_probes = static_cast<int>(samples.size());
    return est;
}

double task_similarity(const std::vector<double>& current_point,
                       const std::vector<std::vector<std::vector<double>>>& previous_tasks,
                       double gamma) {
    if (gamma <= 0.0) throw ContractError("task_similarity: gamma must be > 0");
    double sum = 0.0;
    long count = 0;
    for (const auto& task : previous_tasks) {
        for (const auto& point : task) {
            if (point.size() != current_point.size())
                throw ContractError("task_similarity: dimension mismatch");
            double d2 = 0.0;
            for (std::size_t j = 0; j < point.size(); ++j) {
                double d = current_point[j] - point[j];
                d2 += d * d;
            }
            sum += std::exp(-gamma * d2);
            ++count;
        }
    }
    if (count == 0)
        throw ContractError("task_similarity: undefined without prior-task points");
    return sum / static_cast<double>(count);
}

std::vector<double> compute_regret(const tasks::BanditTask& task,
                                   const std::vector<int>& choices) {
    double best = std::max(task.arm_means[0], task.arm_means[1]);
    std::vector<double> regrets;
    regrets.reserve(choices.size());
    for (int c : choices) {
        if (c < 0 || c > 1) throw ContractError("compute_regret: invalid choice");
        regrets.push_back(best - task.arm_means[static_cast<std::size_t>(c)]);
    }
    return regrets;
}

ErrorMetrics error_metrics(const std::vector<PredictionRecord>& records) {
    ErrorMetrics out;
    std::map<CellKey, std::pair<double, long>> acc;
    std::map<int, std::pair<long, long>> extreme; // trial -> (extreme, total)
    for (const auto& rec : records) {
        if (!rec.valid) {
            ++out.invalid_count;
            continue;
        }
        double err = rec.prediction - rec.target;
        auto& cell = acc[{rec.task, rec.trial}];
        cell.first += err * err;
        cell.second += 1;
        auto& ex = extreme[rec.trial];
        if (std::fabs(rec.prediction) >= 1.0) ++ex.first;
        ++ex.second;
    }
    for (const auto& [key, cell] : acc) {
        double mse = cell.first / static_cast<double>(cell.second);
        out.mse[key] = mse;
        out.rmse[key] = std::sqrt(mse);
    }
    for (const auto& [trial, ex] : extreme)
        out.extreme_rate_by_trial[trial] =
            static_cast<double>(ex.first) / static_cast<double>(ex.second);
    return out;
}

} // namespace iclh::analysis
