#include "doctest.h"

#include <cmath>

#include "qkf/config.hpp"
#include "qkf/harness.hpp"
#include "test_support.hpp"

using namespace qkf;

namespace {

// Small linear-Gaussian scenario for consistency checks: scalar state with
// mild contraction, direct observation.
struct LinearScenario {
    LinearDynamics dynamics{Matrix{{0.97}}, Matrix{{1e-4}}};
    LinearMeasurement measurement{Matrix{{1.0}}};
    Scenario scenario;

    explicit LinearScenario(int steps = 30) {
        scenario.dynamics = &dynamics;
        scenario.measurement = &measurement;
        scenario.prior = GaussianBelief{{0.5}, Matrix{{0.2}}};
        scenario.noise.kind = NoiseSpec::Kind::gaussian;
        scenario.noise.dim = 1;
        scenario.noise.gaussian_std = {0.1};
        scenario.dt = 1.0;
        scenario.steps = steps;
    }
};

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("rmse: zeros, unit errors, spreadsheet oracle") {
    CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(rmse({1.0, -1.0}, {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);

    RngStream rng(61);
    const Vector est = test::random_vector(rng, 10);
    const Vector truth = test::random_vector(rng, 10);
    double acc = 0.0;
    for (int i = 0; i < 10; ++i) acc += (est[i] - truth[i]) * (est[i] - truth[i]);
    CHECK(rmse(est, truth) == doctest::Approx(std::sqrt(acc / 10.0)).epsilon(1e-14));
}

TEST_CASE("simulate_truth: zero prior covariance and zero noise reproduce the mean") {
    LinearScenario ls;
    ls.dynamics = LinearDynamics(Matrix{{0.97}}, Matrix(1, 1));
    ls.scenario.dynamics = &ls.dynamics;
    ls.scenario.prior.covariance = Matrix(1, 1);
    ls.scenario.noise.gaussian_std = {0.0};
    const TruthData truth = simulate_truth(ls.scenario, 123);
    CHECK(truth.initial_state == ls.scenario.prior.mean);
    Vector x = ls.scenario.prior.mean;
    for (std::size_t k = 0; k < truth.states.size(); ++k) {
        x = ls.dynamics.propagate(x, 1.0);
        CHECK(truth.states[k][0] == doctest::Approx(x[0]).epsilon(1e-14));
        CHECK(truth.measurements[k][0] == doctest::Approx(x[0]).epsilon(1e-14));
    }
}

TEST_CASE("the default cadence gives 180 measurement epochs") {
    const ExperimentConfig cfg = default_config("cw");
    const CwScenario cw = make_cw_scenario(cfg);
    CHECK(cw.scenario.steps == 180);
    const TruthData truth = simulate_truth(cw.scenario, 5);
    CHECK(truth.times.size() == 180);
    CHECK(truth.times.front() == doctest::Approx(60.0));
    CHECK(truth.times.back() == doctest::Approx(10800.0));
}

TEST_CASE("three-point noise frequencies match the table probabilities") {
    const ExperimentConfig cfg = default_config("cw");
    NoiseSpec noise = cfg.cw.noise;
    RngStream rng(62);
    const int draws = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i) {
        const Vector eta = noise.sample(rng);
        for (double v : eta)
            for (std::size_t s = 0; s < noise.support.size(); ++s)
                if (v == noise.support[s]) ++counts[s];
    }
    const int total = 2 * draws;
    for (std::size_t s = 0; s < 3; ++s) {
        const double p = noise.probs[s];
        const double se = std::sqrt(p * (1.0 - p) / total);
        CHECK(std::abs(static_cast<double>(counts[s]) / total - p) < 3.0 * se);
    }
}

TEST_CASE("identical seeds give bitwise-identical traces") {
    LinearScenario ls;
    const TruthData t1 = simulate_truth(ls.scenario, 77);
    const TruthData t2 = simulate_truth(ls.scenario, 77);
    CHECK(t1.initial_state == t2.initial_state);
    CHECK(t1.measurements == t2.measurements);

    const RunTrace r1 = run_filters(ls.scenario, t1);
    const RunTrace r2 = run_filters(ls.scenario, t2);
    for (std::size_t f = 0; f < r1.traces.size(); ++f)
        for (std::size_t k = 0; k < r1.traces[f].means.size(); ++k)
            CHECK(r1.traces[f].means[k] == r2.traces[f].means[k]);
}

TEST_CASE("noise-free observable linear system: every filter converges") {
    // Exact measurements of the full state: the gain saturates at one and the
    // posterior lands on the truth regardless of process noise.
    LinearScenario ls(20);
    ls.scenario.noise.gaussian_std = {0.0};
    const TruthData truth = simulate_truth(ls.scenario, 99);
    const RunTrace run = run_filters(ls.scenario, truth);
    for (std::size_t f = 0; f < run.traces.size(); ++f) {
        CHECK(std::abs(run.traces[f].errors.back()[0]) < 1e-9);
    }
}

TEST_CASE("gaussian-noise arctan tracking: EKF and QEKF traces coincide") {
    // Zero state skewness (gaussian closure) and zero noise skewness force
    // the quadratic gain block to vanish, so the traces must match.
    LinearDynamics dynamics(Matrix{{0.995}}, Matrix{{1e-5}});
    ArctanMeasurement measurement;
    Scenario scenario;
    scenario.dynamics = &dynamics;
    scenario.measurement = &measurement;
    scenario.prior = GaussianBelief{{1.0}, Matrix{{0.05}}};
    scenario.noise.kind = NoiseSpec::Kind::gaussian;
    scenario.noise.dim = 1;
    scenario.noise.gaussian_std = {0.01};
    scenario.dt = 1.0;
    scenario.steps = 25;
    scenario.filters = {FilterKind::ekf, FilterKind::qekf, FilterKind::qukf};

    const RunTrace run = run_filters(scenario, simulate_truth(scenario, 17));
    const FilterTrace& ekf = run.trace(FilterKind::ekf);
    const FilterTrace& qekf = run.trace(FilterKind::qekf);
    const FilterTrace& qukf = run.trace(FilterKind::qukf);
    double max_gap = 0.0, qukf_gap = 0.0;
    for (std::size_t k = 0; k < ekf.means.size(); ++k) {
        max_gap = std::max(max_gap, std::abs(ekf.means[k][0] - qekf.means[k][0]));
        qukf_gap = std::max(qukf_gap, std::abs(ekf.means[k][0] - qukf.means[k][0]));
    }
    CHECK(max_gap < 1e-12);
    CHECK(qukf_gap > 1e-6);  // the unscented quadratic filter genuinely differs
}

TEST_CASE("duplicated runs have zero effective sigma") {
    LinearScenario ls(10);
    const TruthData truth = simulate_truth(ls.scenario, 3);
    const RunTrace run = run_filters(ls.scenario, truth);
    const McReport report = aggregate_runs(ls.scenario, {run, run}, 3);
    for (const auto& cs : report.series)
        for (std::size_t k = 0; k < cs.sigma_pos_eff.size(); ++k)
            CHECK(cs.sigma_pos_eff[k] == 0.0);
}

TEST_CASE("monte carlo aggregation is schedule-independent and seed-deterministic") {
    LinearScenario ls(12);
    ls.scenario.filters = {FilterKind::ekf, FilterKind::qukf};
    const McReport serial = monte_carlo(ls.scenario, 16, 2024, 1);
    const McReport parallel = monte_carlo(ls.scenario, 16, 2024, 4);
    for (std::size_t f = 0; f < serial.series.size(); ++f)
        for (std::size_t k = 0; k < serial.times.size(); ++k) {
            CHECK(serial.series[f].sigma_pos_eff[k] == parallel.series[f].sigma_pos_eff[k]);
            CHECK(serial.series[f].sigma_pos_est[k] == parallel.series[f].sigma_pos_est[k]);
        }
}

TEST_CASE("consistent filter on a linear-Gaussian scenario: containment and sigma ratio") {
    LinearScenario ls(30);
    ls.scenario.filters = {FilterKind::ekf};
    const McReport report = monte_carlo(ls.scenario, 1000, 7, 0);
    const auto& cs = report.series[0];
    const std::size_t steps = report.times.size();

    // 3-sigma mass of a Gaussian is 0.9973; allow binomial slack at N=1000.
    for (std::size_t k = 0; k < steps; ++k)
        CHECK(cs.containment[0][k] == doctest::Approx(0.997).epsilon(0.013));

    // After the transient the effective spread tracks the estimated one.
    for (std::size_t k = 2 * steps / 3; k < steps; ++k) {
        const double ratio = cs.sigma_pos_eff[k] / cs.sigma_pos_est[k];
        CHECK(ratio > 0.8);
        CHECK(ratio < 1.25);
    }
}

TEST_CASE("polynomial fits: exact relations and failure modes") {
    // Exact linear relation.
    Vector ys, xs;
    for (int i = 0; i < 50; ++i) {
        const double y = -1.0 + i * 0.05;
        ys.push_back(y);
        xs.push_back(2.0 * y);
    }
    const PolynomialFit lin = sample_polynomial_mmse(xs, ys, 1);
    CHECK(lin.coefficients[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(lin.in_sample_rmse < 1e-12);

    // Exact parabola: degree 2 nails it, degree 1 cannot.
    Vector xs2;
    for (double y : ys) xs2.push_back(y * y);
    const PolynomialFit quad = sample_polynomial_mmse(xs2, ys, 2);
    CHECK(quad.in_sample_rmse < 1e-12);
    const PolynomialFit under = sample_polynomial_mmse(xs2, ys, 1);
    CHECK(under.in_sample_rmse > 0.1);

    CHECK_THROWS_AS(sample_polynomial_mmse(xs, ys, 3), std::invalid_argument);
    CHECK_THROWS_AS(sample_polynomial_mmse({1.0, 2.0}, {0.0, 1.0}, 1), std::invalid_argument);
    const Vector const_y(50, 1.0);
    CHECK_THROWS_AS(sample_polynomial_mmse(xs, const_y, 1), std::invalid_argument);
}

TEST_CASE("conditional mean curve: independence and identity") {
    RngStream rng(63);
    Vector xs, ys;
    for (int i = 0; i < 5000; ++i) {
        xs.push_back(3.0 + rng.normal());
        ys.push_back(rng.normal());
    }
    const ConditionalMeanCurve flat = conditional_mean_curve(xs, ys, 10);
    for (double v : flat.x_means) CHECK(v == doctest::Approx(3.0).epsilon(0.05));

    Vector zs;
    for (double y : ys) zs.push_back(y);
    const ConditionalMeanCurve diag = conditional_mean_curve(zs, ys, 10);
    for (std::size_t b = 0; b < diag.x_means.size(); ++b)
        CHECK(diag.x_means[b] == doctest::Approx(diag.y_centers[b]).epsilon(1e-9));

    CHECK_THROWS_AS(conditional_mean_curve({1.0}, {1.0}, 10), std::invalid_argument);
    CHECK_THROWS_AS(conditional_mean_curve(xs, ys, 3), std::invalid_argument);
}

TEST_CASE("scalar study: rmse ordering across estimator families") {
    ScalarStudyConfig cfg;
    cfg.samples = 100000;
    cfg.seed = 99;
    const ScalarStudyResult result = run_scalar_study(cfg);

    const double cond = result.rmse_table.at("conditional_mean");
    const double deg2 = result.rmse_table.at("qmmse_fit");
    const double deg1 = result.rmse_table.at("lmmse_fit");
    CHECK(cond <= deg2 + 1e-3);
    CHECK(deg2 <= deg1 + 1e-3);

    // In-family floors: closed-form filters cannot beat the sample fits.
    CHECK(result.rmse_table.at("qukf") >= deg2 - 1e-3);
    CHECK(result.rmse_table.at("ukf") >= deg1 - 1e-3);
    // ... and the QUKF sits close to its in-family optimum.
    CHECK(result.rmse_table.at("qukf") <= 1.1 * deg2);

    // The EKF and QEKF overlap under the gaussian closure.
    CHECK(result.rmse_table.at("qekf") ==
          doctest::Approx(result.rmse_table.at("ekf")).epsilon(1e-12));
}

TEST_CASE("scalar study is deterministic in the seed") {
    ScalarStudyConfig cfg;
    cfg.samples = 2000;
    cfg.seed = 4;
    const ScalarStudyResult a = run_scalar_study(cfg);
    const ScalarStudyResult b = run_scalar_study(cfg);
    CHECK(a.xs == b.xs);
    CHECK(a.rmse_table.at("qukf") == b.rmse_table.at("qukf"));
}

TEST_SUITE_END();
