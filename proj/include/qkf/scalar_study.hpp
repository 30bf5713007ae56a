// The scalar arctan study: one measurement update applied to a sampled joint
// cloud (x, y). Each sample is its own truth; the filters are compared as
// estimator curves x_hat(y) against sample-fit and conditional-mean baselines.
#pragma once

#include <map>
#include <string>

#include "qkf/harness.hpp"

namespace qkf {

struct ScalarStudyConfig {
    double prior_mean = 1.0;
    double prior_variance = 0.05;
    double noise_std = 0.01;
    int samples = 100000;
    std::size_t bins = 50;
    uint64_t seed = 2024;
    UtParams ut;
    std::vector<FilterKind> filters{FilterKind::ekf, FilterKind::ukf, FilterKind::qekf,
                                    FilterKind::qukf};
};

// Closed-form single-update estimator x_hat(y) = x0 + B (y - y_hat)
//                                             + C ((y - y_hat)^2 - P_yy).
struct ScalarEstimator {
    double x0 = 0.0;
    double y_hat = 0.0;
    double p_yy = 0.0;
    double b = 0.0;
    double c = 0.0;
    double posterior_variance = 0.0;

    double evaluate(double y) const {
        const double dy = y - y_hat;
        return x0 + b * dy + c * (dy * dy - p_yy);
    }
};

struct ScalarStudyResult {
    Vector xs, ys;                                   // the joint sample cloud
    std::vector<FilterKind> filters;
    std::vector<ScalarEstimator> estimators;         // parallel to `filters`
    std::map<std::string, double> rmse_table;        // filters + fits + cond. mean
    PolynomialFit lmmse_fit;                         // degree 1
    PolynomialFit qmmse_fit;                         // degree 2
    ConditionalMeanCurve cond_mean;
    uint64_t seed = 0;

    const ScalarEstimator& estimator(FilterKind kind) const;
};

// Build the four single-update estimators from the prior belief.
ScalarEstimator scalar_estimator(FilterKind kind, const ScalarStudyConfig& cfg);

// Sample the joint cloud: x ~ N(prior_mean, prior_variance),
// y = arctan(x) + eta with eta ~ N(0, noise_std^2).
void sample_scalar_cloud(const ScalarStudyConfig& cfg, uint64_t seed, int count, Vector& xs,
                         Vector& ys);

ScalarStudyResult run_scalar_study(const ScalarStudyConfig& cfg);

}  // namespace qkf
