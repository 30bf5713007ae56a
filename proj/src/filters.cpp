#include "qkf/filters.hpp"

#include <algorithm>
#include <cmath>

namespace qkf {

GaussianBelief ekf_predict(const GaussianBelief& belief, const DynamicsModel& dynamics, double dt) {
    check_dims(belief.dim() == dynamics.dim(), "ekf_predict");
    const Matrix f = dynamics.transition_jacobian(belief.mean, dt);
    GaussianBelief out;
    out.mean = dynamics.propagate(belief.mean, dt);
    out.covariance = symmetrized(f * belief.covariance * f.transposed() + dynamics.process_noise());
    return out;
}

SigmaSet sigma_points(const GaussianBelief& belief, const UtParams& params) {
    const std::size_t n = belief.dim();
    const double lambda = params.lambda(n);
    const double nl = static_cast<double>(n) + lambda;
    if (!(nl > 0.0)) throw std::invalid_argument("sigma_points: n + lambda must be positive");

    Matrix l;
    try {
        l = cholesky_with_jitter(nl * belief.covariance);
    } catch (const NotPsdError&) {
        // Degenerate-but-valid beliefs (covariance collapsed to ~zero rank)
        // defeat a trace-scaled jitter; any PSD root serves as C C^T = (n+l)P.
        l = psd_square_root(nl * belief.covariance);
    }

    SigmaSet set;
    set.points.reserve(2 * n + 1);
    set.points.push_back(belief.mean);
    for (std::size_t j = 0; j < n; ++j) {
        Vector offset(n);
        for (std::size_t i = 0; i < n; ++i) offset[i] = l(i, j);
        set.points.push_back(belief.mean + offset);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Vector offset(n);
        for (std::size_t i = 0; i < n; ++i) offset[i] = l(i, j);
        set.points.push_back(belief.mean - offset);
    }

    set.mean_weights.assign(2 * n + 1, 1.0 / (2.0 * nl));
    set.cov_weights.assign(2 * n + 1, 1.0 / (2.0 * nl));
    set.mean_weights[0] = lambda / nl;
    set.cov_weights[0] = lambda / nl + (1.0 - params.alpha * params.alpha + params.beta);
    return set;
}

GaussianBelief ukf_predict(const GaussianBelief& belief, const DynamicsModel& dynamics, double dt,
                           const UtParams& params) {
    check_dims(belief.dim() == dynamics.dim(), "ukf_predict");
    const std::size_t n = belief.dim();
    SigmaSet set = sigma_points(belief, params);

    std::vector<Vector> propagated;
    propagated.reserve(set.points.size());
    for (const auto& p : set.points) propagated.push_back(dynamics.propagate(p, dt));

    GaussianBelief out;
    out.mean.assign(n, 0.0);
    for (std::size_t i = 0; i < propagated.size(); ++i)
        out.mean = out.mean + set.mean_weights[i] * propagated[i];

    Matrix p(n, n);
    for (std::size_t i = 0; i < propagated.size(); ++i) {
        const Vector d = propagated[i] - out.mean;
        add_outer(p, set.cov_weights[i], d, d);
    }
    out.covariance = symmetrized(p + dynamics.process_noise());
    return out;
}

MeasurementSpaceMoments linearized_measurement_moments(
    const GaussianBelief& belief, const MeasurementModel& model, const NoiseMoments& noise,
    const std::optional<StateHighMoments>& high) {
    check_dims(belief.dim() == model.state_dim(), "linearized_measurement_moments");
    const Matrix h = model.jacobian(belief.mean);
    const Matrix h2 = kron(h, h);
    const StateHighMoments hm = high ? *high : gaussian_closure(belief.covariance);
    check_dims(hm.skewness.rows() == belief.dim() &&
                   hm.skewness.cols() == belief.dim() * belief.dim(),
               "state skewness shape");

    MeasurementSpaceMoments mm;
    mm.y_hat = model.observe(belief.mean);
    mm.p_xy = mul_transposed(belief.covariance, h);
    mm.p_xy2 = mul_transposed(hm.skewness, h2);
    mm.p_yy = symmetrized(h * mul_transposed(belief.covariance, h));
    mm.p_yy2 = h * mul_transposed(hm.skewness, h2);
    mm.p_y2y2 = symmetrized(h2 * mul_transposed(hm.kurtosis, h2));
    mm.noise_included = false;
    return augment_measurement_noise(mm, noise);
}

MeasurementSpaceMoments unscented_measurement_moments(const GaussianBelief& belief,
                                                      const MeasurementModel& model,
                                                      const NoiseMoments& noise,
                                                      const UtParams& params) {
    check_dims(belief.dim() == model.state_dim(), "unscented_measurement_moments");
    const std::size_t n = belief.dim();
    const std::size_t m = model.meas_dim();
    SigmaSet set = sigma_points(belief, params);

    std::vector<Vector> ys;
    ys.reserve(set.points.size());
    for (const auto& p : set.points) {
        Vector y = model.observe(p);
        // Keep all transformed points on one branch so circular components
        // never mix values across a cut.
        ys.push_back(ys.empty() ? y : model.align(y, ys.front()));
    }

    Vector y_hat(m, 0.0);
    for (std::size_t i = 0; i < ys.size(); ++i) y_hat = y_hat + set.mean_weights[i] * ys[i];

    MeasurementSpaceMoments mm;
    mm.y_hat = y_hat;
    mm.p_xy = Matrix(n, m);
    mm.p_xy2 = Matrix(n, m * m);
    mm.p_yy = Matrix(m, m);
    mm.p_yy2 = Matrix(m, m * m);
    mm.p_y2y2 = Matrix(m * m, m * m);

    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double w = set.cov_weights[i];
        const Vector dx = set.points[i] - belief.mean;
        const Vector dy = ys[i] - y_hat;
        const Vector dy2 = vec_square(dy);
        add_outer(mm.p_xy, w, dx, dy);
        add_outer(mm.p_xy2, w, dx, dy2);
        add_outer(mm.p_yy, w, dy, dy);
        add_outer(mm.p_yy2, w, dy, dy2);
        add_outer(mm.p_y2y2, w, dy2, dy2);
    }
    mm.p_yy = symmetrized(mm.p_yy);
    mm.p_y2y2 = symmetrized(mm.p_y2y2);
    mm.noise_included = false;
    return augment_measurement_noise(mm, noise);
}

namespace {

// Augmented covariance of [dy; reduced dy2]: P_yy and the cross blocks with
// the centered square, P_y2y2 - v(P_yy) v(P_yy)^T, duplicate Kronecker
// coordinates dropped on both sides.
Matrix reduced_augmented_cov(const MeasurementSpaceMoments& mm, const ReductionMaps& maps) {
    const std::size_t m = mm.meas_dim();
    const std::size_t r = maps.reduced_size();
    Matrix centered = mm.p_y2y2;
    const Vector v_pyy = stack(mm.p_yy);
    add_outer(centered, -1.0, v_pyy, v_pyy);
    const Matrix pyy2_red = maps.reduce_cols(mm.p_yy2);
    const Matrix p2_red = maps.reduce_both(centered);

    Matrix pyy_aug(m + r, m + r);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) pyy_aug(i, j) = mm.p_yy(i, j);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < r; ++j) {
            pyy_aug(i, m + j) = pyy2_red(i, j);
            pyy_aug(m + j, i) = pyy2_red(i, j);
        }
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) pyy_aug(m + i, m + j) = p2_red(i, j);
    return symmetrized(pyy_aug);
}

// Solve [B C] Pyy_aug = PxY in reduced coordinates.
AugmentedGain solve_gain(const MeasurementSpaceMoments& mm, bool quadratic) {
    if (!mm.noise_included)
        throw std::invalid_argument("gain requires noise-inclusive measurement moments");
    const std::size_t n = mm.state_dim();
    const std::size_t m = mm.meas_dim();
    ReductionMaps maps = reduction_maps(m);
    const std::size_t r = maps.reduced_size();

    AugmentedGain out;
    out.maps = maps;
    out.quadratic = quadratic;
    out.gain = Matrix(n, m + r);

    if (!quadratic) {
        const double tol = 1e-12 * std::abs(mm.p_yy.trace());
        SymSolveResult res = solve_right_symmetric(mm.p_yy, mm.p_xy, tol);
        if (res.rank == 0) throw DegenerateMomentsError("linear gain: P_yy is singular");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) out.gain(i, j) = res.x(i, j);
        out.rank = res.rank;
        out.min_pivot = res.min_pivot;
        out.used_pinv = res.used_pinv;
        return out;
    }

    const Matrix pyy_aug = reduced_augmented_cov(mm, maps);
    Matrix pxy_aug(n, m + r);
    const Matrix pxy2_red = maps.reduce_cols(mm.p_xy2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) pxy_aug(i, j) = mm.p_xy(i, j);
        for (std::size_t j = 0; j < r; ++j) pxy_aug(i, m + j) = pxy2_red(i, j);
    }

    const double tol = 1e-12 * std::abs(pyy_aug.trace());
    SymSolveResult res = solve_right_symmetric(pyy_aug, pxy_aug, tol);
    if (res.rank == 0)
        throw DegenerateMomentsError("quadratic gain: augmented covariance is singular");
    out.gain = res.x;
    out.rank = res.rank;
    out.min_pivot = res.min_pivot;
    out.used_pinv = res.used_pinv;
    return out;
}

}  // namespace

AugmentedGain quadratic_gain(const MeasurementSpaceMoments& mm) { return solve_gain(mm, true); }

AugmentedGain linear_gain(const MeasurementSpaceMoments& mm) { return solve_gain(mm, false); }

GaussianBelief quadratic_update(const GaussianBelief& prior, const AugmentedGain& gain,
                                const MeasurementSpaceMoments& mm, const Vector& y_obs) {
    const std::size_t m = mm.meas_dim();
    const std::size_t r = gain.maps.reduced_size();
    check_dims(y_obs.size() == m, "quadratic_update measurement");
    check_dims(gain.gain.rows() == prior.dim() && gain.gain.cols() == m + r,
               "quadratic_update gain");

    const Vector residual = y_obs - mm.y_hat;
    // Residual square, recentered so its expectation vanishes: E[dy (x) dy] = v(P_yy).
    const Vector centered_sq = vec_square(residual) - stack(mm.p_yy);
    const Vector sq_red = gain.maps.reduce(centered_sq);

    Vector xi(m + r);
    for (std::size_t i = 0; i < m; ++i) xi[i] = residual[i];
    for (std::size_t i = 0; i < r; ++i) xi[m + i] = gain.quadratic ? sq_red[i] : 0.0;

    const Matrix pyy_aug = reduced_augmented_cov(mm, gain.maps);

    GaussianBelief out;
    out.mean = prior.mean + gain.gain * xi;
    out.covariance =
        symmetrized(prior.covariance - gain.gain * pyy_aug * gain.gain.transposed());

    // A near-exact measurement cancels the posterior covariance down to
    // rounding dust; clamp eigenvalues that are negative only within the
    // belief tolerance (relative to the prior scale) back onto the PSD cone.
    const auto eig = eigen_symmetric(out.covariance);
    if (!eig.values.empty() && eig.values.front() < 0.0 &&
        eig.values.front() >= -1e-10 * std::max(prior.covariance.trace(), 0.0)) {
        Matrix clamped(out.covariance.rows(), out.covariance.cols());
        for (std::size_t k = 0; k < eig.values.size(); ++k) {
            if (eig.values[k] <= 0.0) continue;
            Vector v(out.covariance.rows());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = eig.vectors(i, k);
            add_outer(clamped, eig.values[k], v, v);
        }
        out.covariance = symmetrized(clamped);
    }
    return out;
}

namespace {

// Observation re-expressed so that plain subtraction against y_hat gives the
// on-manifold residual (wraps angle components).
Vector aligned_obs(const MeasurementModel& model, const Vector& y_obs,
                   const MeasurementSpaceMoments& mm) {
    return mm.y_hat + model.residual(y_obs, mm.y_hat);
}

}  // namespace

GaussianBelief ekf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                        const MeasurementModel& model, const NoiseMoments& noise,
                        const Vector& y_obs, double dt) {
    const GaussianBelief prior = ekf_predict(belief, dynamics, dt);
    const MeasurementSpaceMoments mm = linearized_measurement_moments(prior, model, noise);
    return quadratic_update(prior, linear_gain(mm), mm, aligned_obs(model, y_obs, mm));
}

GaussianBelief ukf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                        const MeasurementModel& model, const NoiseMoments& noise,
                        const Vector& y_obs, double dt, const UtParams& params) {
    const GaussianBelief prior = ukf_predict(belief, dynamics, dt, params);
    const MeasurementSpaceMoments mm = unscented_measurement_moments(prior, model, noise, params);
    return quadratic_update(prior, linear_gain(mm), mm, aligned_obs(model, y_obs, mm));
}

GaussianBelief qekf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                         const MeasurementModel& model, const NoiseMoments& noise,
                         const Vector& y_obs, double dt, const StateMomentProvider& provider) {
    const GaussianBelief prior = ekf_predict(belief, dynamics, dt);
    const std::optional<StateHighMoments> high =
        provider ? std::optional<StateHighMoments>(provider(prior)) : std::nullopt;
    const MeasurementSpaceMoments mm = linearized_measurement_moments(prior, model, noise, high);
    return quadratic_update(prior, quadratic_gain(mm), mm, aligned_obs(model, y_obs, mm));
}

GaussianBelief qukf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                         const MeasurementModel& model, const NoiseMoments& noise,
                         const Vector& y_obs, double dt, const UtParams& params) {
    const GaussianBelief prior = ukf_predict(belief, dynamics, dt, params);
    const MeasurementSpaceMoments mm = unscented_measurement_moments(prior, model, noise, params);
    return quadratic_update(prior, quadratic_gain(mm), mm, aligned_obs(model, y_obs, mm));
}

const char* filter_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::ekf: return "ekf";
        case FilterKind::ukf: return "ukf";
        case FilterKind::qekf: return "qekf";
        case FilterKind::qukf: return "qukf";
    }
    return "?";
}

std::optional<FilterKind> filter_from_name(const std::string& name) {
    if (name == "ekf") return FilterKind::ekf;
    if (name == "ukf") return FilterKind::ukf;
    if (name == "qekf") return FilterKind::qekf;
    if (name == "qukf") return FilterKind::qukf;
    return std::nullopt;
}

GaussianBelief filter_step(FilterKind kind, const GaussianBelief& belief,
                           const DynamicsModel& dynamics, const MeasurementModel& model,
                           const NoiseMoments& noise, const Vector& y_obs, double dt,
                           const UtParams& params) {
    switch (kind) {
        case FilterKind::ekf: return ekf_step(belief, dynamics, model, noise, y_obs, dt);
        case FilterKind::ukf: return ukf_step(belief, dynamics, model, noise, y_obs, dt, params);
        case FilterKind::qekf: return qekf_step(belief, dynamics, model, noise, y_obs, dt);
        case FilterKind::qukf: return qukf_step(belief, dynamics, model, noise, y_obs, dt, params);
    }
    throw std::invalid_argument("unknown filter kind");
}

}  // namespace qkf
