#include "qkf/models.hpp"

#include <cmath>

namespace qkf {

double cw_mean_motion(double mu, double semimajor_axis) {
    if (!(mu > 0.0) || !(semimajor_axis > 0.0))
        throw std::invalid_argument("cw_mean_motion: mu and semi-major axis must be positive");
    return std::sqrt(mu / (semimajor_axis * semimajor_axis * semimajor_axis));
}

double CwParams::mean_motion() const { return cw_mean_motion(mu, semimajor_axis); }

Matrix cw_stm(double n, double dt) {
    const double tau = n * dt;
    const double s = std::sin(tau);
    const double c = std::cos(tau);

    Matrix phi(6, 6);
    // In-plane position rows.
    phi(0, 0) = 4.0 - 3.0 * c;
    phi(0, 3) = s / n;
    phi(0, 4) = 2.0 * (1.0 - c) / n;
    phi(1, 0) = 6.0 * (s - tau);
    phi(1, 1) = 1.0;
    phi(1, 3) = 2.0 * (c - 1.0) / n;
    phi(1, 4) = (4.0 * s - 3.0 * tau) / n;
    // Out-of-plane is a harmonic oscillator at the mean motion.
    phi(2, 2) = c;
    phi(2, 5) = s / n;
    // Velocity rows.
    phi(3, 0) = 3.0 * n * s;
    phi(3, 3) = c;
    phi(3, 4) = 2.0 * s;
    phi(4, 0) = 6.0 * n * (c - 1.0);
    phi(4, 3) = -2.0 * s;
    phi(4, 4) = 4.0 * c - 3.0;
    phi(5, 2) = -n * s;
    phi(5, 5) = c;
    return phi;
}

CwDynamics::CwDynamics(const CwParams& params, Matrix process_noise)
    : n_(params.mean_motion()), process_noise_(std::move(process_noise)) {
    check_dims(process_noise_.rows() == 6 && process_noise_.cols() == 6,
               "CwDynamics process noise");
}

Vector CwDynamics::propagate(const Vector& x, double dt) const {
    check_dims(x.size() == 6, "CwDynamics state");
    return cw_stm(n_, dt) * x;
}

Matrix CwDynamics::transition_jacobian(const Vector&, double dt) const { return cw_stm(n_, dt); }

Vector AnglesMeasurement::observe(const Vector& x) const {
    check_dims(x.size() == 6, "AnglesMeasurement state");
    const double px = x[0], py = x[1], pz = x[2];
    const double rho2 = px * px + py * py;
    const double r2 = rho2 + pz * pz;
    if (rho2 <= 0.0 || r2 <= 0.0)
        throw GeometryError("angles undefined: relative position on the z-axis or at the origin");
    return {std::atan2(py, px), std::asin(pz / std::sqrt(r2))};
}

Matrix AnglesMeasurement::jacobian(const Vector& x) const {
    check_dims(x.size() == 6, "AnglesMeasurement state");
    const double px = x[0], py = x[1], pz = x[2];
    const double rho2 = px * px + py * py;
    const double rho = std::sqrt(rho2);
    const double r2 = rho2 + pz * pz;
    if (rho2 <= 0.0 || r2 <= 0.0)
        throw GeometryError("angles undefined: relative position on the z-axis or at the origin");

    Matrix h(2, 6);
    h(0, 0) = -py / rho2;
    h(0, 1) = px / rho2;
    h(1, 0) = -px * pz / (r2 * rho);
    h(1, 1) = -py * pz / (r2 * rho);
    h(1, 2) = rho / r2;
    return h;
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a > M_PI) a -= 2.0 * M_PI;
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

Vector AnglesMeasurement::residual(const Vector& observed, const Vector& predicted) const {
    check_dims(observed.size() == 2 && predicted.size() == 2, "AnglesMeasurement residual");
    return {wrap_angle(observed[0] - predicted[0]), observed[1] - predicted[1]};
}

Vector AnglesMeasurement::align(const Vector& y, const Vector& reference) const {
    check_dims(y.size() == 2 && reference.size() == 2, "AnglesMeasurement align");
    return {reference[0] + wrap_angle(y[0] - reference[0]), y[1]};
}

Vector ArctanMeasurement::observe(const Vector& x) const {
    check_dims(x.size() == 1, "ArctanMeasurement state");
    return {std::atan(x[0])};
}

Matrix ArctanMeasurement::jacobian(const Vector& x) const {
    check_dims(x.size() == 1, "ArctanMeasurement state");
    Matrix h(1, 1);
    h(0, 0) = 1.0 / (1.0 + x[0] * x[0]);
    return h;
}

LinearDynamics::LinearDynamics(Matrix a, Matrix process_noise)
    : a_(std::move(a)), process_noise_(std::move(process_noise)) {
    check_dims(a_.rows() == a_.cols(), "LinearDynamics matrix");
    check_dims(process_noise_.rows() == a_.rows() && process_noise_.cols() == a_.rows(),
               "LinearDynamics process noise");
}

}  // namespace qkf
