#include "qkf/scalar_study.hpp"

#include <cmath>

namespace qkf {

const ScalarEstimator& ScalarStudyResult::estimator(FilterKind kind) const {
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (filters[i] == kind) return estimators[i];
    throw std::invalid_argument("filter not present in study");
}

ScalarEstimator scalar_estimator(FilterKind kind, const ScalarStudyConfig& cfg) {
    const GaussianBelief prior{{cfg.prior_mean}, Matrix{{cfg.prior_variance}}};
    const ArctanMeasurement model;
    const NoiseMoments noise =
        gaussian_noise_moments(Matrix{{cfg.noise_std * cfg.noise_std}});

    const bool unscented = (kind == FilterKind::ukf || kind == FilterKind::qukf);
    const bool quadratic = (kind == FilterKind::qekf || kind == FilterKind::qukf);
    const MeasurementSpaceMoments mm =
        unscented ? unscented_measurement_moments(prior, model, noise, cfg.ut)
                  : linearized_measurement_moments(prior, model, noise);
    const AugmentedGain gain = quadratic ? quadratic_gain(mm) : linear_gain(mm);

    ScalarEstimator est;
    est.x0 = cfg.prior_mean;
    est.y_hat = mm.y_hat[0];
    est.p_yy = mm.p_yy(0, 0);
    est.b = gain.gain(0, 0);
    est.c = gain.quadratic ? gain.gain(0, 1) : 0.0;

    const GaussianBelief posterior = quadratic_update(prior, gain, mm, {est.y_hat});
    est.posterior_variance = posterior.covariance(0, 0);
    return est;
}

void sample_scalar_cloud(const ScalarStudyConfig& cfg, uint64_t seed, int count, Vector& xs,
                         Vector& ys) {
    RngStream rng(seed);
    xs.resize(count);
    ys.resize(count);
    const double sx = std::sqrt(cfg.prior_variance);
    for (int i = 0; i < count; ++i) {
        xs[i] = cfg.prior_mean + sx * rng.normal();
        ys[i] = std::atan(xs[i]) + cfg.noise_std * rng.normal();
    }
}

ScalarStudyResult run_scalar_study(const ScalarStudyConfig& cfg) {
    if (cfg.samples < 10) throw std::invalid_argument("scalar study: need >= 10 samples");

    ScalarStudyResult result;
    result.seed = cfg.seed;
    result.filters = cfg.filters;
    sample_scalar_cloud(cfg, derive_seed(cfg.seed, 0), cfg.samples, result.xs, result.ys);

    for (FilterKind kind : cfg.filters) {
        const ScalarEstimator est = scalar_estimator(kind, cfg);
        Vector fitted(result.ys.size());
        for (std::size_t i = 0; i < result.ys.size(); ++i) fitted[i] = est.evaluate(result.ys[i]);
        result.rmse_table[filter_name(kind)] = rmse(fitted, result.xs);
        result.estimators.push_back(est);
    }

    result.lmmse_fit = sample_polynomial_mmse(result.xs, result.ys, 1);
    result.qmmse_fit = sample_polynomial_mmse(result.xs, result.ys, 2);
    result.rmse_table["lmmse_fit"] = result.lmmse_fit.in_sample_rmse;
    result.rmse_table["qmmse_fit"] = result.qmmse_fit.in_sample_rmse;

    if (result.xs.size() >= 100) {
        result.cond_mean = conditional_mean_curve(result.xs, result.ys, cfg.bins);
        result.rmse_table["conditional_mean"] = result.cond_mean.in_sample_rmse;
    }
    return result;
}

}  // namespace qkf
