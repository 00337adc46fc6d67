#pragma once

#include <array>

#include <Eigen/Dense>

#include "iclh/rng.hpp"

namespace iclh::baselines {

// --- Bayesian linear regression ----------------------------------------

struct BlrPrior {
    Eigen::VectorXd mean;       // weights, intercept last
    Eigen::MatrixXd covariance; // SPD
    double noise_variance = 1.0;

    void validate() const;
    static BlrPrior standard_normal(int dim, double noise_variance = 1.0);
};

struct BlrPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double noise_variance = 1.0;
};

// Conjugate batch update; X carries the intercept column explicitly.
BlrPosterior blr_update(const BlrPrior& prior, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y);

struct BlrPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

BlrPrediction blr_predict(const BlrPosterior& posterior, const Eigen::VectorXd& x);

// --- Kalman-filter bandit beliefs ---------------------------------------

struct ArmBelief {
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> variance{0.0, 0.0};

    double sd(int arm) const;
    static ArmBelief prior(double mean_sd);
};

ArmBelief kalman_update(const ArmBelief& belief, int arm, double reward, double obs_variance);

int policy_greedy(const ArmBelief& belief, Rng& rng);
int policy_ucb(const ArmBelief& belief, double exploration_weight);
int policy_thompson(const ArmBelief& belief, Rng& rng);

struct HybridWeights {
    double boltzmann = 0.0;
    double ucb = 0.0;
    double thompson = 0.0;
};

// Probability of choosing arm 0 under the probit combination of value
// difference, relative uncertainty and uncertainty-scaled value difference.
double hybrid_choice_prob(const ArmBelief& belief, const HybridWeights& w);

// Decision-variable decomposition of a belief state.
struct BeliefRegressors {
    double value_diff = 0.0;       // mu0 - mu1
    double relative_unc = 0.0;     // sd0 - sd1
    double total_unc = 0.0;        // sqrt(var0 + var1)
    double scaled_value_diff = 0.0; // value_diff / total_unc
};

BeliefRegressors belief_regressors(const ArmBelief& belief);

} // namespace iclh::baselines
