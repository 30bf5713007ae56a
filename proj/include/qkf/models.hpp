// Dynamics and measurement model contracts plus the two concrete systems:
// Clohessy-Wiltshire relative motion (state x,y,z,vx,vy,vz in km, km/s) and
// the scalar arctan problem.
#pragma once

#include <memory>

#include "qkf/linalg.hpp"

namespace qkf {

struct GeometryError : std::domain_error {
    using std::domain_error::domain_error;
};

class DynamicsModel {
  public:
    virtual ~DynamicsModel() = default;
    virtual std::size_t dim() const = 0;
    virtual Vector propagate(const Vector& x, double dt) const = 0;
    virtual Matrix transition_jacobian(const Vector& x, double dt) const = 0;
    // Process noise covariance added after propagation.
    virtual const Matrix& process_noise() const = 0;
};

class MeasurementModel {
  public:
    virtual ~MeasurementModel() = default;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t meas_dim() const = 0;
    virtual Vector observe(const Vector& x) const = 0;
    virtual Matrix jacobian(const Vector& x) const = 0;
    // observed - predicted, on the measurement manifold (angle components
    // wrap their difference).
    virtual Vector residual(const Vector& observed, const Vector& predicted) const {
        return observed - predicted;
    }
    // Re-express y on the same branch as reference (identity unless the
    // measurement lives on a circle).
    virtual Vector align(const Vector& y, const Vector& /*reference*/) const { return y; }
};

// ---------------------------------------------------------------------------
// Clohessy-Wiltshire relative motion about a circular-orbit chief
// ---------------------------------------------------------------------------

struct CwParams {
    double mu = 398600.4418;     // km^3/s^2
    double semimajor_axis = 7000.0;  // km
    double mean_motion() const;  // rad/s
};

double cw_mean_motion(double mu, double semimajor_axis);

// Exact closed-form state transition matrix of the CW equations over dt.
Matrix cw_stm(double mean_motion, double dt);

class CwDynamics final : public DynamicsModel {
  public:
    explicit CwDynamics(const CwParams& params, Matrix process_noise = Matrix(6, 6));

    std::size_t dim() const override { return 6; }
    Vector propagate(const Vector& x, double dt) const override;
    Matrix transition_jacobian(const Vector&, double dt) const override;
    const Matrix& process_noise() const override { return process_noise_; }
    double mean_motion() const { return n_; }

  private:
    double n_;
    Matrix process_noise_;
};

// Azimuth/elevation of the relative position: atan2(y, x) and
// asin(z / |r|). Throws GeometryError when the geometry is undefined.
// Azimuth residuals wrap into (-pi, pi]; the trajectory can cross the
// atan2 branch cut.
class AnglesMeasurement final : public MeasurementModel {
  public:
    std::size_t state_dim() const override { return 6; }
    std::size_t meas_dim() const override { return 2; }
    Vector observe(const Vector& x) const override;
    Matrix jacobian(const Vector& x) const override;
    Vector residual(const Vector& observed, const Vector& predicted) const override;
    Vector align(const Vector& y, const Vector& reference) const override;
};

// Difference wrapped into (-pi, pi].
double wrap_angle(double a);

// y = arctan(x), scalar state.
class ArctanMeasurement final : public MeasurementModel {
  public:
    std::size_t state_dim() const override { return 1; }
    std::size_t meas_dim() const override { return 1; }
    Vector observe(const Vector& x) const override;
    Matrix jacobian(const Vector& x) const override;
};

// ---------------------------------------------------------------------------
// Generic linear models (tests, linear-scenario baselines)
// ---------------------------------------------------------------------------

class LinearDynamics final : public DynamicsModel {
  public:
    LinearDynamics(Matrix a, Matrix process_noise);
    std::size_t dim() const override { return a_.rows(); }
    Vector propagate(const Vector& x, double) const override { return a_ * x; }
    Matrix transition_jacobian(const Vector&, double) const override { return a_; }
    const Matrix& process_noise() const override { return process_noise_; }

  private:
    Matrix a_;
    Matrix process_noise_;
};

class LinearMeasurement final : public MeasurementModel {
  public:
    explicit LinearMeasurement(Matrix h) : h_(std::move(h)) {}
    std::size_t state_dim() const override { return h_.cols(); }
    std::size_t meas_dim() const override { return h_.rows(); }
    Vector observe(const Vector& x) const override { return h_ * x; }
    Matrix jacobian(const Vector&) const override { return h_; }

  private:
    Matrix h_;
};

}  // namespace qkf
