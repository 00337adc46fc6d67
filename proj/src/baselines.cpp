#include "iclh/baselines.hpp"

#include <cmath>

#include "iclh/errors.hpp"
#include "iclh/stats.hpp"

namespace iclh::baselines {

void BlrPrior::validate() const {
    if (mean.size() == 0 || covariance.rows() != mean.size() ||
        covariance.cols() != mean.size())
        throw ContractError("BlrPrior: dimension mismatch");
    if (noise_variance <= 0.0) throw ContractError("BlrPrior: noise_variance must be > 0");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ContractError("BlrPrior: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ContractError("BlrPrior: covariance not positive definite");
}

BlrPrior BlrPrior::standard_normal(int dim, double noise_variance) {
    BlrPrior p;
    p.mean = Eigen::VectorXd::Zero(dim);
    p.covariance = Eigen::MatrixXd::Identity(dim, dim);
    p.noise_variance = noise_variance;
    return p;
}

BlrPosterior blr_update(const BlrPrior& prior, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y) {
    prior.validate();
    if (X.rows() != y.size() || X.cols() != prior.mean.size())
        throw ContractError("blr_update: design dimensions do not match prior");
    BlrPosterior post;
    post.noise_variance = prior.noise_variance;
    if (X.rows() == 0) {
        post.mean = prior.mean;
        post.covariance = prior.covariance;
        return post;
    }
    Eigen::MatrixXd prior_precision = prior.covariance.llt().solve(
        Eigen::MatrixXd::Identity(prior.mean.size(), prior.mean.size()));
    Eigen::MatrixXd precision =
        prior_precision + X.transpose() * X / prior.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    post.covariance =
        llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
    post.mean = llt.solve(prior_precision * prior.mean +
                          X.transpose() * y / prior.noise_variance);
    return post;
}

BlrPrediction blr_predict(const BlrPosterior& posterior, const Eigen::VectorXd& x) {
    if (x.size() != posterior.mean.size())
        throw ContractError("blr_predict: input dimension mismatch");
    BlrPrediction pred;
    pred.mean = x.dot(posterior.mean);
    pred.variance = x.dot(posterior.covariance * x) + posterior.noise_variance;
    return pred;
}

double ArmBelief::sd(int arm) const {
    return std::sqrt(variance[static_cast<std::size_t>(arm)]);
}

ArmBelief ArmBelief::prior(double mean_sd) {
    ArmBelief b;
    b.variance = {mean_sd * mean_sd, mean_sd * mean_sd};
    return b;
}

ArmBelief kalman_update(const ArmBelief& belief, int arm, double reward, double obs_variance) {
    if (arm < 0 || arm > 1) throw ContractError("kalman_update: arm out of range");
    if (obs_variance <= 0.0) throw ContractError("kalman_update: obs_variance must be > 0");
    ArmBelief out = belief;
    auto a = static_cast<std::size_t>(arm);
    double gain = belief.variance[a] / (belief.variance[a] + obs_variance);
    out.mean[a] = belief.mean[a] + gain * (reward - belief.mean[a]);
    out.variance[a] = (1.0 - gain) * belief.variance[a];
    return out;
}

int policy_greedy(const ArmBelief& belief, Rng& rng) {
    if (belief.mean[0] == belief.mean[1]) {
        std::uniform_int_distribution<int> coin(0, 1);
        return coin(rng);
    }
    return belief.mean[0] > belief.mean[1] ? 0 : 1;
}

int policy_ucb(const ArmBelief& belief, double exploration_weight) {
    if (exploration_weight < 0.0) throw ContractError("policy_ucb: weight must be >= 0");
    double u0 = belief.mean[0] + exploration_weight * belief.sd(0);
    double u1 = belief.mean[1] + exploration_weight * belief.sd(1);
    return u0 >= u1 ? 0 : 1;
}

int policy_thompson(const ArmBelief& belief, Rng& rng) {
    double draws[2];
    for (int a = 0; a < 2; ++a) {
        double sd = belief.sd(a);
        if (sd > 0.0) {
            std::normal_distribution<double> n(belief.mean[static_cast<std::size_t>(a)], sd);
            draws[a] = n(rng);
        } else {
            draws[a] = belief.mean[static_cast<std::size_t>(a)];
        }
    }
    return draws[0] >= draws[1] ? 0 : 1;
}

BeliefRegressors belief_regressors(const ArmBelief& belief) {
    BeliefRegressors r;
    r.value_diff = belief.mean[0] - belief.mean[1];
    r.relative_unc = belief.sd(0) - belief.sd(1);
    r.total_unc = std::sqrt(belief.variance[0] + belief.variance[1]);
    if (r.total_unc <= 0.0)
        throw ContractError("belief_regressors: total uncertainty is zero");
    r.scaled_value_diff = r.value_diff / r.total_unc;
    return r;
}

double hybrid_choice_prob(const ArmBelief& belief, const HybridWeights& w) {
    BeliefRegressors r = belief_regressors(belief);
    double eta = w.boltzmann * r.value_diff + w.ucb * r.relative_unc +
                 w.thompson * r.scaled_value_diff;
    return stats::normal_cdf(eta);
}

} // namespace iclh::baselines
