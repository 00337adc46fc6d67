#pragma once

#include <cstddef>
#include <vector>

namespace iclh::stats {

double normal_pdf(double x);
double normal_cdf(double x);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Two-sided p-value of a standard normal z statistic.
double normal_two_sided_p(double z);

double mean(const std::vector<double>& v);
// Sample SD (n-1 denominator).
double sample_sd(const std::vector<double>& v);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_one_sided = 1.0; // P(mean(a) < mean(b)) direction: tests a < b
    double p_two_sided = 1.0;
};

// Welch's unequal-variance t-test; one-sided alternative mean(a) < mean(b).
WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);

// One-sample Kolmogorov-Smirnov test against N(mu, sd); returns the
// asymptotic p-value for the supremum statistic.
double ks_test_normal(std::vector<double> sample, double mu, double sd);

} // namespace iclh::stats
