// Truth simulation, Monte Carlo campaigns and the sample-based estimators
// (polynomial MMSE fits, conditional-mean curve) used to benchmark the
// filters. Runs are embarrassingly parallel; every run owns a random stream
// derived from the master seed, and aggregation is order-independent.
#pragma once

#include <map>

#include "qkf/filters.hpp"
#include "qkf/random.hpp"

namespace qkf {

// Measurement-noise specification: joint moments plus a per-run sampler.
struct NoiseSpec {
    enum class Kind { gaussian, three_point };
    Kind kind = Kind::gaussian;
    std::size_t dim = 1;
    Vector gaussian_std;   // per axis, kind == gaussian
    Vector support;        // shared by all axes, kind == three_point
    Vector probs;

    NoiseMoments moments() const;
    Vector sample(RngStream& rng) const;
};

// A fully wired time-series estimation scenario.
struct Scenario {
    const DynamicsModel* dynamics = nullptr;
    const MeasurementModel* measurement = nullptr;
    GaussianBelief prior;
    NoiseSpec noise;
    double dt = 0.0;
    int steps = 0;
    std::vector<FilterKind> filters{FilterKind::ekf, FilterKind::ukf, FilterKind::qekf,
                                    FilterKind::qukf};
    UtParams ut;
};

struct TruthData {
    std::vector<double> times;          // measurement epochs (steps entries)
    std::vector<Vector> states;         // truth at each epoch
    std::vector<Vector> measurements;   // h(truth) + noise
    Vector initial_state;               // truth draw at t = 0
};

struct FilterTrace {
    std::vector<Vector> means;
    std::vector<Matrix> covariances;
    std::vector<Vector> errors;  // mean - truth
};

struct RunTrace {
    TruthData truth;
    std::vector<FilterKind> filters;
    std::vector<FilterTrace> traces;  // parallel to `filters`

    const FilterTrace& trace(FilterKind kind) const;
};

// Per-filter consistency series from a Monte Carlo campaign.
struct ConsistencySeries {
    Vector sigma_pos_est, sigma_pos_eff;   // sqrt of summed position variances
    Vector sigma_vel_est, sigma_vel_eff;
    std::vector<Vector> containment;       // [component][step]: 3-sigma fraction
    Vector rmse_final;                     // per component at the final epoch
};

struct McReport {
    std::vector<double> times;
    std::vector<FilterKind> filters;
    std::vector<ConsistencySeries> series;  // parallel to `filters`
    RunTrace first_run;
    int runs = 0;
    uint64_t master_seed = 0;

    const ConsistencySeries& of(FilterKind kind) const;
};

// Truth draw from the prior, exact propagation, noisy measurements; fully
// reproducible from run_seed.
TruthData simulate_truth(const Scenario& scenario, uint64_t run_seed);

// Run every configured filter over one measurement sequence.
RunTrace run_filters(const Scenario& scenario, const TruthData& truth);

// n_mc runs with per-run derived seeds, optionally in parallel (threads == 0
// picks the hardware count). Aggregation is a fixed-order reduction over run
// indices, so results do not depend on the schedule.
McReport monte_carlo(const Scenario& scenario, int n_mc, uint64_t master_seed, int threads = 0);

// Aggregation split out so duplicated-run edge cases are testable directly.
McReport aggregate_runs(const Scenario& scenario, const std::vector<RunTrace>& runs,
                        uint64_t master_seed);

// sqrt((1/N) sum (est_i - truth_i)^2)
double rmse(const Vector& estimates, const Vector& truths);

// Least-squares fit of x on (1, dy) or (1, dy, dy^2) about the sample mean of y.
struct PolynomialFit {
    int degree = 1;
    double y_center = 0.0;
    Vector coefficients;  // constant, linear[, quadratic]
    double in_sample_rmse = 0.0;

    double evaluate(double y) const;
};

PolynomialFit sample_polynomial_mmse(const Vector& xs, const Vector& ys, int degree);

// Equal-population binned mean of x given y. The tabulated knots define a
// piecewise-linear curve (extrapolated at the ends); its in-sample RMSE uses
// that interpolation.
struct ConditionalMeanCurve {
    Vector y_centers;
    Vector x_means;
    double in_sample_rmse = 0.0;

    double evaluate(double y) const;
};

ConditionalMeanCurve conditional_mean_curve(const Vector& xs, const Vector& ys, std::size_t bins);

}  // namespace qkf
