#include "qkf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace qkf {

NoiseMoments NoiseSpec::moments() const {
    NoiseMoments nm;
    if (kind == Kind::gaussian) {
        check_dims(gaussian_std.size() == dim, "NoiseSpec gaussian std");
        Matrix cov(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) cov(i, i) = gaussian_std[i] * gaussian_std[i];
        nm = gaussian_noise_moments(cov);
    } else {
        const ScalarMoments axis = discrete_moments(support, probs);
        nm = independent_noise_moments(std::vector<ScalarMoments>(dim, axis));
    }
    const NoiseSpec spec = *this;
    nm.sampler = [spec](RngStream& rng) { return spec.sample(rng); };
    return nm;
}

Vector NoiseSpec::sample(RngStream& rng) const {
    Vector eta(dim);
    if (kind == Kind::gaussian) {
        for (std::size_t i = 0; i < dim; ++i) eta[i] = gaussian_std[i] * rng.normal();
    } else {
        for (std::size_t i = 0; i < dim; ++i) eta[i] = support[rng.categorical(probs)];
    }
    return eta;
}

namespace {

Vector draw_from(const Vector& mean, const Matrix& sqrt_factor, RngStream& rng) {
    Vector z = rng.normal_vector(mean.size());
    Vector x = mean;
    for (std::size_t i = 0; i < mean.size(); ++i)
        for (std::size_t j = 0; j < mean.size(); ++j) x[i] += sqrt_factor(i, j) * z[j];
    return x;
}

}  // namespace

TruthData simulate_truth(const Scenario& scenario, uint64_t run_seed) {
    check_dims(scenario.dynamics && scenario.measurement, "scenario models");
    check_dims(scenario.steps >= 1 && scenario.dt > 0.0, "scenario cadence/horizon");

    RngStream rng(run_seed);
    TruthData data;
    data.initial_state = draw_from(scenario.prior.mean, psd_square_root(scenario.prior.covariance), rng);

    const Matrix& q = scenario.dynamics->process_noise();
    const bool noisy_dynamics = max_abs(q) > 0.0;
    const Matrix q_sqrt = noisy_dynamics ? psd_square_root(q) : Matrix();

    Vector x = data.initial_state;
    data.times.reserve(scenario.steps);
    data.states.reserve(scenario.steps);
    data.measurements.reserve(scenario.steps);
    for (int k = 1; k <= scenario.steps; ++k) {
        x = scenario.dynamics->propagate(x, scenario.dt);
        if (noisy_dynamics) x = draw_from(x, q_sqrt, rng);
        data.times.push_back(k * scenario.dt);
        data.states.push_back(x);
        data.measurements.push_back(scenario.measurement->observe(x) +
                                    scenario.noise.sample(rng));
    }
    return data;
}

const FilterTrace& RunTrace::trace(FilterKind kind) const {
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (filters[i] == kind) return traces[i];
    throw std::invalid_argument("filter not present in trace");
}

const ConsistencySeries& McReport::of(FilterKind kind) const {
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (filters[i] == kind) return series[i];
    throw std::invalid_argument("filter not present in report");
}

RunTrace run_filters(const Scenario& scenario, const TruthData& truth) {
    RunTrace run;
    run.truth = truth;
    run.filters = scenario.filters;
    const NoiseMoments noise = scenario.noise.moments();

    for (FilterKind kind : scenario.filters) {
        FilterTrace trace;
        GaussianBelief belief = scenario.prior;
        for (std::size_t k = 0; k < truth.measurements.size(); ++k) {
            try {
                belief = filter_step(kind, belief, *scenario.dynamics, *scenario.measurement,
                                     noise, truth.measurements[k], scenario.dt, scenario.ut);
            } catch (const std::exception& e) {
                throw std::runtime_error(std::string(filter_name(kind)) + " failed at step " +
                                         std::to_string(k + 1) + ": " + e.what());
            }
            trace.means.push_back(belief.mean);
            trace.covariances.push_back(belief.covariance);
            trace.errors.push_back(belief.mean - truth.states[k]);
        }
        run.traces.push_back(std::move(trace));
    }
    return run;
}

McReport aggregate_runs(const Scenario& scenario, const std::vector<RunTrace>& runs,
                        uint64_t master_seed) {
    check_dims(!runs.empty(), "aggregate_runs: no runs");
    const std::size_t n_runs = runs.size();
    const std::size_t steps = runs.front().truth.times.size();
    const std::size_t n = scenario.prior.dim();

    // Position block is the first three components when the state carries a
    // velocity half (n >= 6); otherwise every component counts as position.
    std::vector<std::size_t> pos_idx, vel_idx;
    if (n >= 6) {
        pos_idx = {0, 1, 2};
        vel_idx = {3, 4, 5};
    } else {
        for (std::size_t j = 0; j < n; ++j) pos_idx.push_back(j);
    }

    McReport report;
    report.times = runs.front().truth.times;
    report.filters = scenario.filters;
    report.first_run = runs.front();
    report.runs = static_cast<int>(n_runs);
    report.master_seed = master_seed;

    for (std::size_t fi = 0; fi < scenario.filters.size(); ++fi) {
        ConsistencySeries cs;
        cs.sigma_pos_est.assign(steps, 0.0);
        cs.sigma_pos_eff.assign(steps, 0.0);
        cs.sigma_vel_est.assign(steps, 0.0);
        cs.sigma_vel_eff.assign(steps, 0.0);
        cs.containment.assign(n, Vector(steps, 0.0));
        cs.rmse_final.assign(n, 0.0);

        for (std::size_t k = 0; k < steps; ++k) {
            Vector mean_err(n, 0.0);
            for (const auto& run : runs) {
                const auto& tr = run.traces[fi];
                mean_err = mean_err + (1.0 / n_runs) * tr.errors[k];
            }

            double est_pos = 0.0, est_vel = 0.0;
            Vector var(n, 0.0);
            for (const auto& run : runs) {
                const auto& tr = run.traces[fi];
                const Matrix& p = tr.covariances[k];
                double tp = 0.0, tv = 0.0;
                for (std::size_t j : pos_idx) tp += p(j, j);
                for (std::size_t j : vel_idx) tv += p(j, j);
                est_pos += std::sqrt(std::max(tp, 0.0));
                est_vel += std::sqrt(std::max(tv, 0.0));
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = tr.errors[k][j] - mean_err[j];
                    var[j] += d * d / n_runs;
                    if (std::abs(tr.errors[k][j]) <= 3.0 * std::sqrt(std::max(p(j, j), 0.0)))
                        cs.containment[j][k] += 1.0 / n_runs;
                }
            }
            cs.sigma_pos_est[k] = est_pos / n_runs;
            cs.sigma_vel_est[k] = est_vel / n_runs;
            double vp = 0.0, vv = 0.0;
            for (std::size_t j : pos_idx) vp += var[j];
            for (std::size_t j : vel_idx) vv += var[j];
            cs.sigma_pos_eff[k] = std::sqrt(vp);
            cs.sigma_vel_eff[k] = std::sqrt(vv);
        }

        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (const auto& run : runs) {
                const double e = run.traces[fi].errors[steps - 1][j];
                s += e * e;
            }
            cs.rmse_final[j] = std::sqrt(s / n_runs);
        }
        report.series.push_back(std::move(cs));
    }
    return report;
}

McReport monte_carlo(const Scenario& scenario, int n_mc, uint64_t master_seed, int threads) {
    check_dims(n_mc >= 1, "monte_carlo: n_mc");
    std::vector<RunTrace> runs(n_mc);

    unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_mc));

    auto work = [&](unsigned t) {
        for (int r = static_cast<int>(t); r < n_mc; r += static_cast<int>(n_threads)) {
            const TruthData truth = simulate_truth(scenario, derive_seed(master_seed, r));
            runs[r] = run_filters(scenario, truth);
        }
    };
    if (n_threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    return aggregate_runs(scenario, runs, master_seed);
}

double rmse(const Vector& estimates, const Vector& truths) {
    check_dims(estimates.size() == truths.size(), "rmse lengths");
    if (estimates.empty()) throw std::invalid_argument("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double d = estimates[i] - truths[i];
        s += d * d;
    }
    return std::sqrt(s / estimates.size());
}

double PolynomialFit::evaluate(double y) const {
    const double dy = y - y_center;
    double v = coefficients[0] + coefficients[1] * dy;
    if (degree == 2) v += coefficients[2] * dy * dy;
    return v;
}

PolynomialFit sample_polynomial_mmse(const Vector& xs, const Vector& ys, int degree) {
    check_dims(xs.size() == ys.size(), "sample_polynomial_mmse lengths");
    if (degree != 1 && degree != 2) throw std::invalid_argument("degree must be 1 or 2");
    if (xs.size() < 10) throw std::invalid_argument("sample_polynomial_mmse: need >= 10 samples");

    const std::size_t n = xs.size();
    const std::size_t terms = degree + 1;
    double y_mean = 0.0;
    for (double y : ys) y_mean += y / n;

    Matrix g(terms, terms);
    Vector b(terms, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = ys[i] - y_mean;
        double reg[3] = {1.0, dy, dy * dy};
        for (std::size_t a = 0; a < terms; ++a) {
            b[a] += reg[a] * xs[i];
            for (std::size_t c = 0; c < terms; ++c) g(a, c) += reg[a] * reg[c];
        }
    }

    PolynomialFit fit;
    fit.degree = degree;
    fit.y_center = y_mean;
    // G is symmetric; a pivot collapsing relative to its trace means the
    // design lost rank (constant y, or a perfectly linear y for degree 2).
    const SymSolveResult res = solve_right_symmetric(g, Matrix::row(b), 1e-12 * g.trace());
    if (res.rank < terms)
        throw std::invalid_argument("sample_polynomial_mmse: rank-deficient design (constant y?)");
    fit.coefficients.assign(terms, 0.0);
    for (std::size_t a = 0; a < terms; ++a) fit.coefficients[a] = res.x(0, a);

    Vector fitted(n);
    for (std::size_t i = 0; i < n; ++i) fitted[i] = fit.evaluate(ys[i]);
    fit.in_sample_rmse = rmse(fitted, xs);
    return fit;
}

double ConditionalMeanCurve::evaluate(double y) const {
    const std::size_t b = y_centers.size();
    if (b == 1) return x_means[0];
    std::size_t hi = 1;
    while (hi + 1 < b && y_centers[hi] < y) ++hi;
    const std::size_t lo = hi - 1;
    const double span = y_centers[hi] - y_centers[lo];
    if (span <= 0.0) return x_means[lo];
    const double t = (y - y_centers[lo]) / span;  // may extrapolate beyond [0, 1]
    return x_means[lo] + t * (x_means[hi] - x_means[lo]);
}

ConditionalMeanCurve conditional_mean_curve(const Vector& xs, const Vector& ys, std::size_t bins) {
    check_dims(xs.size() == ys.size(), "conditional_mean_curve lengths");
    if (xs.size() < 100) throw std::invalid_argument("conditional_mean_curve: need >= 100 samples");
    if (bins < 5) throw std::invalid_argument("conditional_mean_curve: need >= 5 bins");

    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });

    ConditionalMeanCurve curve;
    curve.y_centers.resize(bins);
    curve.x_means.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins;
        const std::size_t hi = (b + 1) * n / bins;
        double sx = 0.0, sy = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            sx += xs[order[i]];
            sy += ys[order[i]];
        }
        const double count = static_cast<double>(hi - lo);
        curve.x_means[b] = sx / count;
        curve.y_centers[b] = sy / count;
    }

    Vector fitted(n);
    for (std::size_t i = 0; i < n; ++i) fitted[i] = curve.evaluate(ys[i]);
    curve.in_sample_rmse = rmse(fitted, xs);
    return curve;
}

}  // namespace qkf
