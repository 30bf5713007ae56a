#include "doctest.h"

#include <cmath>

#include "qkf/filters.hpp"
#include "qkf/harness.hpp"
#include "test_support.hpp"

using namespace qkf;

namespace {

// Scalar f(x) = x^2 toy dynamics for prediction checks.
class SquareDynamics final : public DynamicsModel {
  public:
    SquareDynamics() : q_(1, 1) {}
    std::size_t dim() const override { return 1; }
    Vector propagate(const Vector& x, double) const override { return {x[0] * x[0]}; }
    Matrix transition_jacobian(const Vector& x, double) const override {
        return Matrix{{2.0 * x[0]}};
    }
    const Matrix& process_noise() const override { return q_; }

  private:
    Matrix q_;
};

// Empirical measurement-space moments of a joint sample cloud. Because every
// block is an exact moment of the same empirical distribution, the augmented
// covariance is PSD by construction.
struct Cloud {
    std::vector<Vector> xs, ys;
    GaussianBelief prior;  // empirical mean/cov of x
    MeasurementSpaceMoments mm;
};

Cloud cloud_moments(const std::vector<Vector>& xs, const std::vector<Vector>& ys) {
    const std::size_t count = xs.size();
    const std::size_t n = xs[0].size(), m = ys[0].size();
    Cloud c;
    c.xs = xs;
    c.ys = ys;

    Vector x_mean(n, 0.0), y_mean(m, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        x_mean = x_mean + (1.0 / count) * xs[i];
        y_mean = y_mean + (1.0 / count) * ys[i];
    }
    c.prior.mean = x_mean;
    c.prior.covariance = Matrix(n, n);
    c.mm.y_hat = y_mean;
    c.mm.p_xy = Matrix(n, m);
    c.mm.p_xy2 = Matrix(n, m * m);
    c.mm.p_yy = Matrix(m, m);
    c.mm.p_yy2 = Matrix(m, m * m);
    c.mm.p_y2y2 = Matrix(m * m, m * m);
    for (std::size_t i = 0; i < count; ++i) {
        const Vector dx = xs[i] - x_mean;
        const Vector dy = ys[i] - y_mean;
        const Vector dy2 = vec_square(dy);
        const double w = 1.0 / count;
        add_outer(c.prior.covariance, w, dx, dx);
        add_outer(c.mm.p_xy, w, dx, dy);
        add_outer(c.mm.p_xy2, w, dx, dy2);
        add_outer(c.mm.p_yy, w, dy, dy);
        add_outer(c.mm.p_yy2, w, dy, dy2);
        add_outer(c.mm.p_y2y2, w, dy2, dy2);
    }
    c.mm.p_yy = symmetrized(c.mm.p_yy);
    c.mm.p_y2y2 = symmetrized(c.mm.p_y2y2);
    c.mm.noise_included = true;  // the cloud already carries its noise
    return c;
}

Cloud random_quadratic_cloud(RngStream& rng, std::size_t n, std::size_t m, std::size_t count) {
    const Matrix h = test::random_matrix(rng, m, n);
    const Matrix q = test::random_matrix(rng, m, n);
    std::vector<Vector> xs, ys;
    xs.reserve(count);
    ys.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Vector x = rng.normal_vector(n);
        Vector y = h * x;
        const Vector qx = q * x;
        for (std::size_t r = 0; r < m; ++r) y[r] += 0.3 * qx[r] * qx[r] + 0.05 * rng.normal();
        xs.push_back(x);
        ys.push_back(y);
    }
    return cloud_moments(xs, ys);
}

double quadratic_estimate_mse(const Cloud& c, const AugmentedGain& gain) {
    double mse = 0.0;
    for (std::size_t i = 0; i < c.ys.size(); ++i) {
        const Vector res = c.ys[i] - c.mm.y_hat;
        const Vector sq = gain.maps.reduce(vec_square(res) - stack(c.mm.p_yy));
        Vector xi(gain.gain.cols(), 0.0);
        for (std::size_t k = 0; k < res.size(); ++k) xi[k] = res[k];
        if (gain.quadratic)
            for (std::size_t k = 0; k < sq.size(); ++k) xi[res.size() + k] = sq[k];
        const Vector est = c.prior.mean + gain.gain * xi;
        const Vector err = est - c.xs[i];
        mse += dot(err, err) / c.ys.size();
    }
    return mse;
}

}  // namespace

TEST_SUITE_BEGIN("filters");

TEST_CASE("ekf predict: identity, exact linear flow, scalar square map") {
    RngStream rng(41);
    const GaussianBelief belief{test::random_vector(rng, 3), test::random_spd(rng, 3)};
    const LinearDynamics identity(Matrix::identity(3), Matrix(3, 3));
    const GaussianBelief same = ekf_predict(belief, identity, 10.0);
    CHECK(max_abs_diff(same.covariance, belief.covariance) < 1e-14);
    CHECK(norm(same.mean - belief.mean) < 1e-14);

    const CwDynamics cw(CwParams{});
    GaussianBelief b6{Vector{2.0, 10.0, -3.5, 0.01, -0.005, 0.0005}, test::random_spd(rng, 6, 0.1)};
    const GaussianBelief pred = ekf_predict(b6, cw, 60.0);
    const Matrix phi = cw_stm(cw.mean_motion(), 60.0);
    CHECK(max_abs_diff(pred.covariance, symmetrized(phi * b6.covariance * phi.transposed())) <
          1e-12);

    const SquareDynamics square;
    const GaussianBelief scalar = ekf_predict({{2.0}, Matrix{{0.1}}}, square, 1.0);
    CHECK(scalar.mean[0] == doctest::Approx(4.0));
    CHECK(scalar.covariance(0, 0) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("sigma points: quoted scalar weights and offsets") {
    UtParams params;
    params.alpha = 1.0;
    params.beta = 2.0;
    params.kappa = 2.0;
    const SigmaSet set = sigma_points({{0.0}, Matrix{{1.0}}}, params);
    REQUIRE(set.points.size() == 3);
    CHECK(set.points[0][0] == 0.0);
    CHECK(set.points[1][0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(set.points[2][0] == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-12));
    CHECK(set.mean_weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(set.mean_weights[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(set.cov_weights[0] == doctest::Approx(2.0 / 3.0 + 2.0).epsilon(1e-12));
    CHECK(set.cov_weights[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("sigma points reproduce the mean and covariance exactly") {
    RngStream rng(42);
    for (std::size_t n : {1, 2, 5}) {
        UtParams params;  // defaults: alpha 1, beta 2, kappa 3 - n
        const GaussianBelief belief{test::random_vector(rng, n), test::random_spd(rng, n)};
        const SigmaSet set = sigma_points(belief, params);
        REQUIRE(set.points.size() == 2 * n + 1);

        double wsum = 0.0;
        for (double w : set.mean_weights) wsum += w;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));

        Vector mean(n, 0.0);
        for (std::size_t i = 0; i < set.points.size(); ++i)
            mean = mean + set.mean_weights[i] * set.points[i];
        CHECK(norm(mean - belief.mean) < 1e-10 * std::max(1.0, norm(belief.mean)));

        UtParams beta0 = params;
        beta0.beta = 0.0;
        const SigmaSet set0 = sigma_points(belief, beta0);
        Matrix cov(n, n);
        for (std::size_t i = 0; i < set0.points.size(); ++i) {
            const Vector d = set0.points[i] - belief.mean;
            add_outer(cov, set0.cov_weights[i], d, d);
        }
        CHECK(max_abs_diff(cov, belief.covariance) < 1e-10 * max_abs(belief.covariance));
    }
}

TEST_CASE("sigma points reject a non-positive n + lambda") {
    UtParams params;
    params.kappa = -5.0;  // n + lambda = alpha^2 (n + kappa) = -4
    CHECK_THROWS_AS(sigma_points({{0.0}, Matrix{{1.0}}}, params), std::invalid_argument);
}

TEST_CASE("sigma points: jitter rescues a singular covariance, indefinite fails") {
    Matrix rank1(2, 2);
    add_outer(rank1, 1.0, {1.0, 2.0}, {1.0, 2.0});
    CHECK_NOTHROW(sigma_points({{0.0, 0.0}, rank1}, UtParams{}));

    Matrix indef = Matrix::identity(2);
    indef(1, 1) = -0.5;
    CHECK_THROWS_AS(sigma_points({{0.0, 0.0}, indef}, UtParams{}), NotPsdError);
}

TEST_CASE("ukf predict: exact on linear maps, unbiased square map") {
    RngStream rng(43);
    const Matrix a = 0.5 * test::random_matrix(rng, 3, 3);
    const LinearDynamics lin(a, 0.01 * Matrix::identity(3));
    const GaussianBelief belief{test::random_vector(rng, 3), test::random_spd(rng, 3)};
    const GaussianBelief via_ekf = ekf_predict(belief, lin, 1.0);
    const GaussianBelief via_ukf = ukf_predict(belief, lin, 1.0, UtParams{});
    CHECK(norm(via_ekf.mean - via_ukf.mean) < 1e-10);
    CHECK(max_abs_diff(via_ekf.covariance, via_ukf.covariance) < 1e-10);

    const LinearDynamics identity(Matrix::identity(2), Matrix(2, 2));
    const GaussianBelief b2{{0.3, -0.7}, test::random_spd(rng, 2)};
    const GaussianBelief same = ukf_predict(b2, identity, 5.0, UtParams{});
    CHECK(norm(same.mean - b2.mean) < 1e-12);
    CHECK(max_abs_diff(same.covariance, b2.covariance) < 1e-12);

    // E[x^2] under N(0,1) is 1; the UT sum reproduces it exactly.
    UtParams p;
    p.beta = 0.0;
    p.kappa = 2.0;
    const SquareDynamics square;
    const GaussianBelief pred = ukf_predict({{0.0}, Matrix{{1.0}}}, square, 1.0, p);
    CHECK(pred.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linearized moments: worked scalar arctan numbers") {
    const GaussianBelief prior{{1.0}, Matrix{{0.05}}};
    const ArctanMeasurement model;

    // Clean transformation blocks (zero noise).
    const MeasurementSpaceMoments clean =
        linearized_measurement_moments(prior, model, NoiseMoments::zero(1));
    CHECK(clean.y_hat[0] == doctest::Approx(M_PI / 4).epsilon(1e-12));
    CHECK(clean.p_xy(0, 0) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(clean.p_yy(0, 0) == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(clean.p_xy2(0, 0) == 0.0);
    CHECK(clean.p_yy2(0, 0) == 0.0);
    CHECK(clean.p_y2y2(0, 0) == doctest::Approx(4.6875e-4).epsilon(1e-12));

    // With measurement noise variance 0.01 the innovation variance is 0.0225.
    const MeasurementSpaceMoments noisy =
        linearized_measurement_moments(prior, model, gaussian_noise_moments(Matrix{{0.01}}));
    CHECK(noisy.p_yy(0, 0) == doctest::Approx(0.0225).epsilon(1e-12));
    CHECK(noisy.p_yy2(0, 0) == 0.0);
    CHECK(noisy.noise_included);
}

TEST_CASE("linearized moments match sampling for a linear-Gaussian joint") {
    RngStream rng(44);
    const Matrix h{{1.0, -0.5, 0.2}, {0.3, 0.8, -0.1}};
    const LinearMeasurement model(h);
    const GaussianBelief prior{Vector(3, 0.0), test::random_spd(rng, 3, 0.2)};
    const Matrix r = test::random_spd(rng, 2, 0.05);
    const MeasurementSpaceMoments mm =
        linearized_measurement_moments(prior, model, gaussian_noise_moments(r));

    const Matrix lx = cholesky_with_jitter(prior.covariance);
    const Matrix lr = cholesky_with_jitter(r);
    Matrix s_xy(3, 2), s_yy(2, 2), s_y2y2(4, 4);
    const std::size_t draws = 1000000;
    for (std::size_t i = 0; i < draws; ++i) {
        const Vector dx = sample_gaussian(rng, Vector(3, 0.0), lx);
        const Vector dy = h * dx + sample_gaussian(rng, Vector(2, 0.0), lr);
        const double w = 1.0 / draws;
        add_outer(s_xy, w, dx, dy);
        add_outer(s_yy, w, dy, dy);
        const Vector dy2 = vec_square(dy);
        add_outer(s_y2y2, w, dy2, dy2);
    }
    auto close = [&](const Matrix& analytic, const Matrix& sampled, double tol) {
        const double floor = 0.1 * max_abs(analytic);
        for (std::size_t i = 0; i < analytic.rows(); ++i)
            for (std::size_t j = 0; j < analytic.cols(); ++j)
                if (std::abs(analytic(i, j)) >= floor)
                    CHECK(std::abs(analytic(i, j) - sampled(i, j)) <=
                          tol * std::abs(analytic(i, j)));
    };
    close(mm.p_xy, s_xy, 0.02);
    close(mm.p_yy, s_yy, 0.02);
    close(mm.p_y2y2, s_y2y2, 0.02);
}

TEST_CASE("unscented moments: linear measurement collapses to the linearized blocks") {
    RngStream rng(45);
    const Matrix h = test::random_matrix(rng, 2, 3);
    const LinearMeasurement model(h);
    const GaussianBelief prior{test::random_vector(rng, 3), test::random_spd(rng, 3)};
    const NoiseMoments noise = gaussian_noise_moments(test::random_spd(rng, 2, 0.1));

    const MeasurementSpaceMoments lin = linearized_measurement_moments(prior, model, noise);
    const MeasurementSpaceMoments ut = unscented_measurement_moments(prior, model, noise, UtParams{});
    CHECK(max_abs_diff(lin.p_xy, ut.p_xy) < 1e-12 * std::max(1.0, max_abs(lin.p_xy)));
    CHECK(max_abs_diff(lin.p_yy, ut.p_yy) < 1e-12 * std::max(1.0, max_abs(lin.p_yy)));
    // Sigma-point symmetry cancels every odd sum for a linear map.
    CHECK(max_abs(ut.p_yy2) < 1e-12 * max_abs(ut.p_yy));
    CHECK(max_abs(ut.p_xy2) < 1e-12 * max_abs(ut.p_xy));
}

TEST_CASE("unscented moments capture the arctan skew and track sampled moments") {
    const GaussianBelief prior{{1.0}, Matrix{{0.05}}};
    const ArctanMeasurement model;
    const NoiseMoments noise = gaussian_noise_moments(Matrix{{1e-4}});
    const MeasurementSpaceMoments ut =
        unscented_measurement_moments(prior, model, noise, UtParams{});

    // Concave region: the state-to-square cross moment must come out negative.
    CHECK(ut.p_xy2(0, 0) < 0.0);

    RngStream rng(46);
    const std::size_t draws = 1000000;
    double m_xy = 0.0, m_xy2 = 0.0, m_yy = 0.0, m_yy2 = 0.0, m_y2y2 = 0.0;
    Vector ys(draws);
    Vector xs(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        xs[i] = 1.0 + std::sqrt(0.05) * rng.normal();
        ys[i] = std::atan(xs[i]) + 0.01 * rng.normal();
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        xm += xs[i] / draws;
        ym += ys[i] / draws;
    }
    for (std::size_t i = 0; i < draws; ++i) {
        const double dx = xs[i] - xm, dy = ys[i] - ym;
        m_xy += dx * dy / draws;
        m_xy2 += dx * dy * dy / draws;
        m_yy += dy * dy / draws;
        m_yy2 += dy * dy * dy / draws;
        m_y2y2 += dy * dy * dy * dy / draws;
    }
    CHECK(std::abs(ut.p_xy(0, 0) - m_xy) < 0.05 * std::abs(m_xy));
    CHECK(std::abs(ut.p_yy(0, 0) - m_yy) < 0.05 * std::abs(m_yy));
    CHECK(std::abs(ut.p_xy2(0, 0) - m_xy2) < 0.05 * std::abs(m_xy2));
    // Three sigma points reproduce second moments of the transformed variable
    // well; its own third and fourth moments degrade with the nonlinearity.
    CHECK(std::abs(ut.p_yy2(0, 0) - m_yy2) < 0.12 * std::abs(m_yy2));
    CHECK(std::abs(ut.p_y2y2(0, 0) - m_y2y2) < 0.25 * std::abs(m_y2y2));
}

TEST_CASE("quadratic gain: zero cross blocks decouple into the Kalman gain") {
    MeasurementSpaceMoments mm;
    mm.y_hat = {0.0};
    mm.p_xy = Matrix{{0.025}};
    mm.p_xy2 = Matrix(1, 1);
    mm.p_yy = Matrix{{0.0225}};
    mm.p_yy2 = Matrix(1, 1);
    mm.p_y2y2 = Matrix{{3.0 * 0.0225 * 0.0225}};
    mm.noise_included = true;

    const AugmentedGain gain = quadratic_gain(mm);
    CHECK(gain.gain(0, 0) == doctest::Approx(0.025 / 0.0225).epsilon(1e-12));
    CHECK(std::abs(gain.gain(0, 1)) < 1e-12);
    CHECK(!gain.used_pinv);
}

TEST_CASE("gain requires noise-inclusive moments and rejects all-zero moments") {
    MeasurementSpaceMoments mm;
    mm.y_hat = {0.0};
    mm.p_xy = Matrix(1, 1);
    mm.p_xy2 = Matrix(1, 1);
    mm.p_yy = Matrix(1, 1);
    mm.p_yy2 = Matrix(1, 1);
    mm.p_y2y2 = Matrix(1, 1);
    CHECK_THROWS_AS(quadratic_gain(mm), std::invalid_argument);
    mm.noise_included = true;
    CHECK_THROWS_AS(quadratic_gain(mm), DegenerateMomentsError);
    CHECK_THROWS_AS(linear_gain(mm), DegenerateMomentsError);
}

TEST_CASE("vector measurements: full augmented covariance is singular, reduced is not") {
    RngStream rng(47);
    const Cloud c = random_quadratic_cloud(rng, 2, 2, 4000);

    // Assemble the full 6x6 augmented covariance: the duplicated Kronecker
    // coordinate forces rank <= 5.
    const std::size_t m = 2;
    Matrix centered = c.mm.p_y2y2;
    const Vector v = stack(c.mm.p_yy);
    add_outer(centered, -1.0, v, v);
    Matrix full(m + m * m, m + m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) full(i, j) = c.mm.p_yy(i, j);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m * m; ++j) {
            full(i, m + j) = c.mm.p_yy2(i, j);
            full(m + j, i) = c.mm.p_yy2(i, j);
        }
    for (std::size_t i = 0; i < m * m; ++i)
        for (std::size_t j = 0; j < m * m; ++j) full(m + i, m + j) = centered(i, j);

    const auto eig = eigen_symmetric(full);
    CHECK(std::abs(eig.values.front()) < 1e-10 * full.trace());

    const AugmentedGain gain = quadratic_gain(c.mm);
    CHECK(gain.rank == 5);
    CHECK(!gain.used_pinv);
    // Residual of the solved system: K Pyy_aug = PxY in reduced coordinates.
    const ReductionMaps maps = gain.maps;
    Matrix pyy_red(5, 5);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) pyy_red(i, j) = c.mm.p_yy(i, j);
    const Matrix cross = maps.reduce_cols(c.mm.p_yy2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            pyy_red(i, 2 + j) = cross(i, j);
            pyy_red(2 + j, i) = cross(i, j);
        }
    const Matrix c_red = maps.reduce_both(centered);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) pyy_red(2 + i, 2 + j) = c_red(i, j);
    Matrix pxy_red(2, 5);
    const Matrix pxy2_red = maps.reduce_cols(c.mm.p_xy2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) pxy_red(i, j) = c.mm.p_xy(i, j);
        for (std::size_t j = 0; j < 3; ++j) pxy_red(i, 2 + j) = pxy2_red(i, j);
    }
    CHECK(max_abs_diff(gain.gain * pyy_red, pxy_red) < 1e-8 * std::max(1.0, max_abs(pxy_red)));
}

TEST_CASE("update with C = 0 is the textbook Kalman update") {
    RngStream rng(48);
    const Cloud c = random_quadratic_cloud(rng, 3, 2, 3000);
    const AugmentedGain lin = linear_gain(c.mm);
    const Vector y_obs = c.ys[7];
    const GaussianBelief posterior = quadratic_update(c.prior, lin, c.mm, y_obs);

    const Matrix k = solve_right_symmetric(c.mm.p_yy, c.mm.p_xy, 0.0).x;
    const Vector textbook_mean = c.prior.mean + k * (y_obs - c.mm.y_hat);
    const Matrix textbook_cov =
        symmetrized(c.prior.covariance - k * c.mm.p_yy * k.transposed());
    CHECK(norm(posterior.mean - textbook_mean) < 1e-10 * std::max(1.0, norm(textbook_mean)));
    CHECK(max_abs_diff(posterior.covariance, textbook_cov) < 1e-10);
}

TEST_CASE("zero innovation: linear mean unchanged, covariance still contracts") {
    RngStream rng(49);
    const Cloud c = random_quadratic_cloud(rng, 2, 1, 2000);
    const AugmentedGain lin = linear_gain(c.mm);
    const GaussianBelief posterior = quadratic_update(c.prior, lin, c.mm, c.mm.y_hat);
    CHECK(norm(posterior.mean - c.prior.mean) < 1e-12);
    CHECK(posterior.covariance.trace() < c.prior.covariance.trace());
}

TEST_CASE("update corrections are unbiased over measurement realizations") {
    RngStream rng(50);
    const Cloud c = random_quadratic_cloud(rng, 1, 1, 100000);
    const AugmentedGain gain = quadratic_gain(c.mm);

    // Feed the sampled measurements back through the update: the average
    // correction must vanish (E[dy] = 0, E[dy^2] = P_yy by construction).
    double mean_corr = 0.0, mean_sq = 0.0;
    for (const auto& y : c.ys) {
        const GaussianBelief post = quadratic_update(c.prior, gain, c.mm, y);
        const double corr = post.mean[0] - c.prior.mean[0];
        mean_corr += corr / c.ys.size();
        mean_sq += corr * corr / c.ys.size();
    }
    const double se = std::sqrt(mean_sq / c.ys.size());
    CHECK(std::abs(mean_corr) < 3.0 * std::max(se, 1e-12));
}

TEST_CASE("posterior is PSD with non-increasing trace on 1000 random updates") {
    RngStream rng(51);
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 1 + round % 3;
        const std::size_t m = 1 + round % 2;
        const Cloud c = random_quadratic_cloud(rng, n, m, 400);
        AugmentedGain gain = (round % 2) ? quadratic_gain(c.mm) : linear_gain(c.mm);
        const Vector& y_obs = c.ys[round % c.ys.size()];
        const GaussianBelief post = quadratic_update(c.prior, gain, c.mm, y_obs);
        CHECK(is_psd(post.covariance, 1e-8));
        CHECK(post.covariance.trace() <= c.prior.covariance.trace() + 1e-12);
    }
}

TEST_CASE("in-model quadratic estimator never loses to the linear one") {
    RngStream rng(52);
    for (int round = 0; round < 20; ++round) {
        const Cloud c = random_quadratic_cloud(rng, 2, 1 + round % 2, 2000);
        const double mse_quad = quadratic_estimate_mse(c, quadratic_gain(c.mm));
        const double mse_lin = quadratic_estimate_mse(c, linear_gain(c.mm));
        CHECK(mse_quad <= mse_lin + 1e-12);
    }
}

TEST_CASE("reduced update equals the full-coordinate pseudo-inverse update") {
    RngStream rng(53);
    for (int round = 0; round < 10; ++round) {
        const Cloud c = random_quadratic_cloud(rng, 2, 2, 5000);
        const AugmentedGain gain = quadratic_gain(c.mm);
        const Vector y_obs = c.ys[round];
        const GaussianBelief reduced = quadratic_update(c.prior, gain, c.mm, y_obs);

        // Full Kronecker coordinates with a pseudo-inverse.
        const std::size_t m = 2, full_dim = m + m * m;
        Matrix centered = c.mm.p_y2y2;
        const Vector v = stack(c.mm.p_yy);
        add_outer(centered, -1.0, v, v);
        Matrix pyy_full(full_dim, full_dim);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) pyy_full(i, j) = c.mm.p_yy(i, j);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m * m; ++j) {
                pyy_full(i, m + j) = c.mm.p_yy2(i, j);
                pyy_full(m + j, i) = c.mm.p_yy2(i, j);
            }
        for (std::size_t i = 0; i < m * m; ++i)
            for (std::size_t j = 0; j < m * m; ++j) pyy_full(m + i, m + j) = centered(i, j);
        Matrix pxy_full(2, full_dim);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < m; ++j) pxy_full(i, j) = c.mm.p_xy(i, j);
            for (std::size_t j = 0; j < m * m; ++j) pxy_full(i, m + j) = c.mm.p_xy2(i, j);
        }
        const auto pinv = pinv_symmetric(pyy_full, 1e-11 * pyy_full.trace());
        const Matrix k_full = pxy_full * pinv.inverse;

        const Vector res = y_obs - c.mm.y_hat;
        const Vector sq = vec_square(res) - stack(c.mm.p_yy);
        Vector xi(full_dim);
        for (std::size_t i = 0; i < m; ++i) xi[i] = res[i];
        for (std::size_t i = 0; i < m * m; ++i) xi[m + i] = sq[i];
        const Vector full_mean = c.prior.mean + k_full * xi;
        const Matrix full_cov =
            symmetrized(c.prior.covariance - k_full * pyy_full * k_full.transposed());

        CHECK(norm(reduced.mean - full_mean) < 1e-8 * std::max(1.0, norm(full_mean)));
        CHECK(max_abs_diff(reduced.covariance, full_cov) <
              1e-8 * std::max(1.0, max_abs(full_cov)));
    }
}

TEST_CASE("orthogonality of the optimal quadratic estimator: exhaustive scalar joint") {
    // Exact moments of a small discrete joint distribution; the optimal
    // estimator error must be orthogonal to 1, dy and every dy2 coordinate.
    const Vector x_support{-1.0, 0.4, 1.7};
    const Vector y_support{-1.2, -0.3, 0.5, 1.1, 2.2};
    std::vector<std::vector<double>> p(3, std::vector<double>(5));
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            p[i][j] = 1.0 + std::sin(3.0 * i + 7.0 * j) * 0.9 + 0.1 * i * j;
            total += p[i][j];
        }
    for (auto& row : p)
        for (auto& v : row) v /= total;

    double ex = 0.0, ey = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            ex += p[i][j] * x_support[i];
            ey += p[i][j] * y_support[j];
        }

    MeasurementSpaceMoments mm;
    mm.y_hat = {ey};
    mm.p_xy = Matrix(1, 1);
    mm.p_xy2 = Matrix(1, 1);
    mm.p_yy = Matrix(1, 1);
    mm.p_yy2 = Matrix(1, 1);
    mm.p_y2y2 = Matrix(1, 1);
    mm.noise_included = true;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double dx = x_support[i] - ex, dy = y_support[j] - ey;
            mm.p_xy(0, 0) += p[i][j] * dx * dy;
            mm.p_xy2(0, 0) += p[i][j] * dx * dy * dy;
            mm.p_yy(0, 0) += p[i][j] * dy * dy;
            mm.p_yy2(0, 0) += p[i][j] * dy * dy * dy;
            mm.p_y2y2(0, 0) += p[i][j] * dy * dy * dy * dy;
        }

    const AugmentedGain gain = quadratic_gain(mm);
    const double b = gain.gain(0, 0), cq = gain.gain(0, 1);

    double e1 = 0.0, edy = 0.0, edy2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double dy = y_support[j] - ey;
            const double g = ex + b * dy + cq * (dy * dy - mm.p_yy(0, 0));
            const double err = x_support[i] - g;
            e1 += p[i][j] * err;
            edy += p[i][j] * err * dy;
            edy2 += p[i][j] * err * dy * dy;
        }
    CHECK(std::abs(e1) < 1e-10);
    CHECK(std::abs(edy) < 1e-10);
    CHECK(std::abs(edy2) < 1e-10);
}

TEST_CASE("orthogonality holds for a vector measurement through the reduction maps") {
    // Seven-point support in y (rank 5 after reduction), scalar state.
    const std::vector<Vector> y_support{{0.0, 0.0}, {1.0, 0.0},  {0.0, 1.0}, {1.2, 1.1},
                                        {2.1, 0.4}, {-0.8, 1.3}, {0.5, -1.0}};
    const Vector x_support{-0.6, 0.9};
    std::vector<std::vector<double>> p(2, std::vector<double>(7));
    double total = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            p[i][j] = 1.0 + 0.8 * std::cos(2.0 * i + 5.0 * j) + 0.15 * j;
            total += p[i][j];
        }
    for (auto& row : p)
        for (auto& v : row) v /= total;

    double ex = 0.0;
    Vector ey(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            ex += p[i][j] * x_support[i];
            ey = ey + p[i][j] * y_support[j];
        }

    MeasurementSpaceMoments mm;
    mm.y_hat = ey;
    mm.p_xy = Matrix(1, 2);
    mm.p_xy2 = Matrix(1, 4);
    mm.p_yy = Matrix(2, 2);
    mm.p_yy2 = Matrix(2, 4);
    mm.p_y2y2 = Matrix(4, 4);
    mm.noise_included = true;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const double dx = x_support[i] - ex;
            const Vector dy = y_support[j] - ey;
            const Vector dy2 = vec_square(dy);
            add_outer(mm.p_xy, p[i][j], {dx}, dy);
            add_outer(mm.p_xy2, p[i][j], {dx}, dy2);
            add_outer(mm.p_yy, p[i][j], dy, dy);
            add_outer(mm.p_yy2, p[i][j], dy, dy2);
            add_outer(mm.p_y2y2, p[i][j], dy2, dy2);
        }

    const AugmentedGain gain = quadratic_gain(mm);
    CHECK(gain.rank == 5);

    Vector moments(1 + 2 + 4, 0.0);  // against 1, dy, full dy2
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const Vector dy = y_support[j] - ey;
            const Vector sq_red = gain.maps.reduce(vec_square(dy) - stack(mm.p_yy));
            Vector xi(2 + 3);
            xi[0] = dy[0];
            xi[1] = dy[1];
            for (std::size_t k = 0; k < 3; ++k) xi[2 + k] = sq_red[k];
            const Vector est = Vector{ex} + gain.gain * xi;
            const double err = x_support[i] - est[0];
            moments[0] += p[i][j] * err;
            moments[1] += p[i][j] * err * dy[0];
            moments[2] += p[i][j] * err * dy[1];
            const Vector dy2 = vec_square(dy);
            for (std::size_t k = 0; k < 4; ++k) moments[3 + k] += p[i][j] * err * dy2[k];
        }
    for (double v : moments) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("all four filters coincide on a linear-Gaussian step") {
    RngStream rng(54);
    const Matrix a{{0.9, 0.1}, {-0.05, 0.95}};
    const LinearDynamics dyn(a, 1e-3 * Matrix::identity(2));
    const LinearMeasurement model(Matrix{{1.0, 0.5}});
    const NoiseMoments noise = gaussian_noise_moments(Matrix{{0.04}});
    const GaussianBelief belief{{0.4, -0.2}, test::random_spd(rng, 2, 0.2)};
    const Vector y_obs{0.37};

    const GaussianBelief ekf = ekf_step(belief, dyn, model, noise, y_obs, 1.0);
    const GaussianBelief ukf = ukf_step(belief, dyn, model, noise, y_obs, 1.0, UtParams{});
    const GaussianBelief qekf = qekf_step(belief, dyn, model, noise, y_obs, 1.0);
    const GaussianBelief qukf = qukf_step(belief, dyn, model, noise, y_obs, 1.0, UtParams{});

    for (const auto* other : {&ukf, &qekf, &qukf}) {
        CHECK(norm(ekf.mean - other->mean) < 1e-9 * std::max(1.0, norm(ekf.mean)));
        CHECK(max_abs_diff(ekf.covariance, other->covariance) < 1e-9);
    }
}

TEST_CASE("gaussian closure makes the QEKF collapse onto the EKF") {
    const GaussianBelief prior{{1.0}, Matrix{{0.05}}};
    const ArctanMeasurement model;
    const NoiseMoments noise = gaussian_noise_moments(Matrix{{1e-4}});
    const LinearDynamics still(Matrix::identity(1), Matrix(1, 1));

    RngStream rng(55);
    for (int i = 0; i < 100; ++i) {
        const Vector y_obs{0.7854 + 0.3 * (2.0 * rng.uniform01() - 1.0)};
        const GaussianBelief ekf = ekf_step(prior, still, model, noise, y_obs, 1.0);
        const GaussianBelief qekf = qekf_step(prior, still, model, noise, y_obs, 1.0);
        CHECK(std::abs(ekf.mean[0] - qekf.mean[0]) <= 1e-10 * std::max(1.0, std::abs(ekf.mean[0])));
    }
}

TEST_CASE("the QUKF posterior mean is a parabola in the observation") {
    const GaussianBelief prior{{1.0}, Matrix{{0.05}}};
    const ArctanMeasurement model;
    const NoiseMoments noise = gaussian_noise_moments(Matrix{{1e-4}});
    const LinearDynamics still(Matrix::identity(1), Matrix(1, 1));

    Vector ys, means;
    for (double y = 0.4; y <= 1.2; y += 0.05) {
        ys.push_back(y);
        means.push_back(qukf_step(prior, still, model, noise, {y}, 1.0, UtParams{}).mean[0]);
    }
    // Exact parabolic fit: nonzero curvature, negligible residual.
    const PolynomialFit fit = sample_polynomial_mmse(means, ys, 2);
    CHECK(std::abs(fit.coefficients[2]) > 0.1);
    CHECK(fit.in_sample_rmse < 1e-9);
}

TEST_CASE("qekf and qukf agree on a linear model under gaussian closure") {
    RngStream rng(56);
    const Matrix a{{0.98, 0.05}, {0.0, 0.97}};
    const LinearDynamics dyn(a, 1e-4 * Matrix::identity(2));
    const LinearMeasurement model(Matrix{{0.7, -0.4}});
    const NoiseMoments noise = gaussian_noise_moments(Matrix{{0.02}});
    const GaussianBelief belief{{1.0, -1.0}, test::random_spd(rng, 2, 0.3)};
    const GaussianBelief qekf = qekf_step(belief, dyn, model, noise, {0.9}, 1.0);
    const GaussianBelief qukf = qukf_step(belief, dyn, model, noise, {0.9}, 1.0, UtParams{});
    CHECK(norm(qekf.mean - qukf.mean) < 1e-9 * std::max(1.0, norm(qekf.mean)));
    CHECK(max_abs_diff(qekf.covariance, qukf.covariance) < 1e-9);
}

TEST_SUITE_END();
