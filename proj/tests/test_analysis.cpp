#include <cmath>
#include <random>

#include <doctest.h>

#include "iclh/analysis.hpp"
#include "iclh/errors.hpp"
#include "iclh/scripted_agents.hpp"
#include "iclh/stats.hpp"

using namespace iclh;

TEST_SUITE("analysis") {

TEST_CASE("ols matches the normal-equation oracle") {
    Rng rng(51);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 60, d = 3;
        Eigen::MatrixXd X(n, d);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
            y(i) = 2.0 * X(i, 0) - X(i, 2) + 0.5 + 0.3 * normal(rng);
        }
        auto fit = analysis::ols_fit(X, y, {"a", "b", "c"}, false);

        // oracle: explicit inverse on the augmented design
        Eigen::MatrixXd Xa(n, d + 1);
        Xa.leftCols(d) = X;
        Xa.col(d) = Eigen::VectorXd::Ones(n);
        Eigen::VectorXd beta = (Xa.transpose() * Xa).inverse() * Xa.transpose() * y;
        CHECK((fit.beta - beta).cwiseAbs().maxCoeff() < 1e-8);
        for (long i = 0; i < fit.beta.size(); ++i) {
            CHECK(fit.statistics(i) ==
                  doctest::Approx(fit.beta(i) / fit.standard_errors(i)).epsilon(1e-9));
            CHECK(fit.ci95_halfwidth(i) ==
                  doctest::Approx(1.96 * fit.standard_errors(i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("ols standardization changes betas but not t statistics") {
    Rng rng(52);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 80;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 10.0 + 5.0 * normal(rng);
        X(i, 1) = normal(rng);
        y(i) = 0.2 * X(i, 0) - X(i, 1) + normal(rng);
    }
    auto raw = analysis::ols_fit(X, y, {"a", "b"}, false);
    auto std_fit = analysis::ols_fit(X, y, {"a", "b"}, true);
    CHECK(std_fit.beta(0) != doctest::Approx(raw.beta(0)));
    CHECK(std_fit.statistics(0) == doctest::Approx(raw.statistics(0)).epsilon(1e-9));
    CHECK(std_fit.statistics(1) == doctest::Approx(raw.statistics(1)).epsilon(1e-9));
    CHECK(std_fit.p_values(0) == doctest::Approx(raw.p_values(0)).epsilon(1e-9));
}

TEST_CASE("probit score matches central finite differences") {
    Rng rng(53);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int n = 200, p = 4;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXi c(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = normal(rng);
        c(i) = uni(rng) < 0.5 ? 1 : 0;
    }
    for (int rep = 0; rep < 20; ++rep) {
        // moderate coefficients keep fitted probabilities away from the
        // clamped tails, where the log-likelihood is intentionally flat
        Eigen::VectorXd beta(p);
        for (int j = 0; j < p; ++j) beta(j) = 0.5 * normal(rng);
        Eigen::VectorXd score = analysis::probit_score(X, c, beta);
        const double h = 1e-5;
        Eigen::VectorXd fd(p);
        for (int j = 0; j < p; ++j) {
            Eigen::VectorXd up = beta, down = beta;
            up(j) += h;
            down(j) -= h;
            fd(j) = (analysis::probit_log_likelihood(X, c, up) -
                     analysis::probit_log_likelihood(X, c, down)) /
                    (2.0 * h);
        }
        CHECK((score - fd).norm() / std::max(1.0, score.norm()) < 1e-4);
    }
}

TEST_CASE("probit fit recovers generating coefficients") {
    Rng rng(54);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int n = 4000;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXi c(n);
    Eigen::VectorXd truth(2);
    truth << 0.8, -0.5;
    for (int i = 0; i < n; ++i) {
        X(i, 0) = normal(rng);
        X(i, 1) = normal(rng);
        double p = stats::normal_cdf(X.row(i).dot(truth));
        c(i) = uni(rng) < p ? 1 : 0;
    }
    auto fit = analysis::probit_fit(X, c, {"x0", "x1"});
    CHECK(!fit.quasi_separation);
    for (int j = 0; j < 2; ++j)
        CHECK(std::fabs(fit.beta(j) - truth(j)) < 3.0 * fit.standard_errors(j));
    CHECK(fit.p_values(0) < 0.001);
}

TEST_CASE("probit flags quasi-separation") {
    Rng rng(55);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 200;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXi c(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = normal(rng);
        c(i) = X(i, 0) > 0.0 ? 1 : 0; // perfectly separable
    }
    auto fit = analysis::probit_fit(X, c, {"x"});
    CHECK(fit.quasi_separation);
    CHECK(fit.beta(0) > 10.0);
}

TEST_CASE("probit design replay matches a hand-run Kalman filter") {
    analysis::KalmanParams params; // 64 / 32
    std::vector<analysis::BanditTrialObs> obs = {
        {0, 1, 1, 0, 6.0, true},
        {0, 1, 2, 1, -3.0, true},
        {0, 1, 3, 0, 9.0, false},
        {0, 2, 1, 1, 1.5, true},
    };
    auto rows = analysis::build_probit_design(obs, params);
    REQUIRE(rows.size() == 4);
    // trial 1: flat prior
    CHECK(rows[0].value_diff == doctest::Approx(0.0));
    CHECK(rows[0].relative_unc == doctest::Approx(0.0));
    CHECK(rows[0].task_centered == doctest::Approx(0.0));
    CHECK(rows[0].choice == 1); // arm 0 chosen

    // after (arm 0, 6.0): mu0 = 4, var0 = 64/3
    CHECK(rows[1].value_diff == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rows[1].relative_unc ==
          doctest::Approx(std::sqrt(64.0 / 3.0) - 8.0).epsilon(1e-12));
    double tu = std::sqrt(64.0 / 3.0 + 64.0);
    CHECK(rows[1].scaled_value_diff == doctest::Approx(4.0 / tu).epsilon(1e-12));
    CHECK(rows[1].choice == 0); // arm 1 chosen

    // after (arm 1, -3.0): mu1 = -2, var1 = 64/3
    CHECK(rows[2].value_diff == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(rows[2].relative_unc == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(!rows[2].valid);

    // new task resets the belief; interactions scale with task - 1
    CHECK(rows[3].value_diff == doctest::Approx(0.0));
    CHECK(rows[3].task_centered == doctest::Approx(1.0));

    auto [X, y] = analysis::probit_design_matrix(rows);
    CHECK(X.rows() == 3); // the invalid row is dropped
    CHECK(X.cols() == 6);

    // out-of-order records are rejected
    std::vector<analysis::BanditTrialObs> bad = {{0, 1, 1, 0, 1.0, true},
                                                 {0, 1, 3, 0, 1.0, true}};
    CHECK_THROWS_AS(analysis::build_probit_design(bad, params), DataIntegrityError);
    std::vector<analysis::BanditTrialObs> late_start = {{0, 1, 2, 0, 1.0, true}};
    CHECK_THROWS_AS(analysis::build_probit_design(late_start, params), DataIntegrityError);
}

TEST_CASE("strategy coefficient names") {
    CHECK(analysis::kStrategyCoefficientNames.size() == 6);
    CHECK(analysis::kStrategyCoefficientNames[0] == "value_diff");
    CHECK(analysis::kStrategyCoefficientNames[5] == "scaled_value_diff_x_task");
}

TEST_CASE("function prior estimation from a linear scripted agent") {
    scripted::AgentParams params;
    params.kind = scripted::AgentKind::linear;
    params.linear_slope = 2.0;
    params.linear_intercept = 5.0;
    params.linear_noise_sd = 0.0;
    auto client = scripted::make_scripted_client(params);
    prompts::FunctionHistory empty;
    empty.tasks.clear();
    analysis::FunctionPriorProbeConfig cfg;
    auto est = analysis::estimate_function_prior(*client, empty, cfg);
    CHECK(est.n_points_used == 20);
    CHECK(est.slope == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(est.intercept == doctest::Approx(5.0).epsilon(1e-4));
}

TEST_CASE("function prior estimation rejects all-outlier answers") {
    scripted::AgentParams params;
    params.kind = scripted::AgentKind::constant;
    params.constant_text = " 999999";
    auto client = scripted::make_scripted_client(params);
    prompts::FunctionHistory empty;
    analysis::FunctionPriorProbeConfig cfg;
    CHECK_THROWS_AS(analysis::estimate_function_prior(*client, empty, cfg), FitError);
}

TEST_CASE("bandit prior estimation from a constant agent") {
    scripted::AgentParams params;
    params.kind = scripted::AgentKind::constant;
    params.constant_text = " 3.5";
    auto client = scripted::make_scripted_client(params);
    prompts::BanditHistory h;
    auto est = analysis::estimate_bandit_prior(*client, h, 'K');
    CHECK(est.mean == doctest::Approx(3.5));
    CHECK(est.sd == doctest::Approx(0.0));
    CHECK(est.n_probes == 5);
}

TEST_CASE("task similarity hand cases") {
    // one previous point at squared distance 1/gamma -> exactly e^-1
    double gamma = 0.2;
    std::vector<double> current{0.0, 0.0};
    std::vector<std::vector<std::vector<double>>> prev{
        {{std::sqrt(1.0 / gamma), 0.0}}};
    CHECK(analysis::task_similarity(current, prev, gamma) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    // identical point -> similarity 1; average over two points
    std::vector<std::vector<std::vector<double>>> both{
        {{0.0, 0.0}, {std::sqrt(1.0 / gamma), 0.0}}};
    CHECK(analysis::task_similarity(current, both, gamma) ==
          doctest::Approx(0.5 * (1.0 + std::exp(-1.0))).epsilon(1e-12));

    CHECK_THROWS_AS(analysis::task_similarity(current, {}, gamma), ContractError);
    CHECK_THROWS_AS(analysis::task_similarity(current, prev, 0.0), ContractError);
}

TEST_CASE("regret and error metrics hand cases") {
    tasks::BanditTask task;
    task.arm_means = {2.0, -1.0};
    auto regrets = analysis::compute_regret(task, {0, 1, 0});
    CHECK((regrets == std::vector<double>{0.0, 3.0, 0.0}));
    CHECK_THROWS_AS(analysis::compute_regret(task, {2}), ContractError);

    std::vector<analysis::PredictionRecord> preds = {
        {1, 1, 0.5, 0.0, true},
        {1, 1, 1.5, 0.0, true},  // extreme
        {1, 2, -2.0, 0.0, true}, // extreme
        {2, 1, 0.0, 1.0, true},
        {1, 1, 0.0, 0.0, false}, // invalid
    };
    auto m = analysis::error_metrics(preds);
    CHECK(m.invalid_count == 1);
    CHECK((m.mse[{1, 1}] == doctest::Approx((0.25 + 2.25) / 2.0)));
    CHECK((m.rmse[{1, 2}] == doctest::Approx(2.0)));
    CHECK(m.extreme_rate_by_trial[1] == doctest::Approx(1.0 / 3.0));
    CHECK(m.extreme_rate_by_trial[2] == doctest::Approx(1.0));
}

} // TEST_SUITE
