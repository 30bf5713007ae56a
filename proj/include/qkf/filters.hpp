// The four estimators: EKF, UKF and their quadratic-update counterparts QEKF
// and QUKF. One shared quadratic update core consumes measurement-space
// moments produced either by linearization or by the unscented transformation;
// the linear update is the special case with the quadratic gain block zeroed.
#pragma once

#include <functional>
#include <optional>

#include "qkf/models.hpp"
#include "qkf/moments.hpp"
#include "qkf/tensor.hpp"

namespace qkf {

struct GaussianBelief {
    Vector mean;       // n
    Matrix covariance; // n x n, kept symmetric

    std::size_t dim() const { return mean.size(); }
};

// Unscented transformation parameters; lambda = alpha^2 (n + kappa) - n.
// kappa defaults to 3 - n, which matches scalar Gaussian fourth moments.
struct UtParams {
    double alpha = 1.0;
    double beta = 2.0;
    std::optional<double> kappa;

    double kappa_for(std::size_t n) const {
        return kappa ? *kappa : 3.0 - static_cast<double>(n);
    }
    double lambda(std::size_t n) const {
        return alpha * alpha * (static_cast<double>(n) + kappa_for(n)) - static_cast<double>(n);
    }
};

struct SigmaSet {
    std::vector<Vector> points;  // 2n+1 points, mean first
    Vector mean_weights;
    Vector cov_weights;
};

// Quadratic Kalman gain over the reduced augmented measurement space
// [dy; unique entries of dy (x) dy].
struct AugmentedGain {
    Matrix gain;          // n x (m + m(m+1)/2); columns [B | C_reduced]
    ReductionMaps maps;
    std::size_t rank = 0;
    double min_pivot = 0.0;
    bool used_pinv = false;
    bool quadratic = true;  // false when the C block was forced to zero

    std::size_t meas_dim() const { return maps.dim; }
};

using StateMomentProvider = std::function<StateHighMoments(const GaussianBelief&)>;

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

GaussianBelief ekf_predict(const GaussianBelief& belief, const DynamicsModel& dynamics, double dt);

// Sigma points from the lower Cholesky factor of (n+lambda) P, with the
// escalating-jitter policy; throws NotPsdError when the factorization fails.
SigmaSet sigma_points(const GaussianBelief& belief, const UtParams& params);

GaussianBelief ukf_predict(const GaussianBelief& belief, const DynamicsModel& dynamics, double dt,
                           const UtParams& params);

// ---------------------------------------------------------------------------
// Measurement-space moments (noise included on return)
// ---------------------------------------------------------------------------

// Linearized blocks: P_xy = P H^T, P_xy2 = S H2^T, Pbar_yy = H P H^T,
// Pbar_yy2 = H S H2^T, Pbar_y2y2 = H2 K H2^T with H2 = H (x) H, then additive
// noise augmentation. `high` defaults to the Gaussian closure of the prior.
MeasurementSpaceMoments linearized_measurement_moments(
    const GaussianBelief& belief, const MeasurementModel& model, const NoiseMoments& noise,
    const std::optional<StateHighMoments>& high = std::nullopt);

// Sigma-point sums over deviations and their Kronecker squares, then additive
// noise augmentation. Points are drawn fresh from the supplied belief.
MeasurementSpaceMoments unscented_measurement_moments(const GaussianBelief& belief,
                                                      const MeasurementModel& model,
                                                      const NoiseMoments& noise,
                                                      const UtParams& params);

// ---------------------------------------------------------------------------
// Update
// ---------------------------------------------------------------------------

// Solve [B C] Pyy_aug = PxY in reduced coordinates (duplicate Kronecker
// rows/columns removed). Falls back to a pseudo-inverse below the pivot
// threshold 1e-12 * trace; throws DegenerateMomentsError if even that is
// singular. Requires noise-inclusive moments.
AugmentedGain quadratic_gain(const MeasurementSpaceMoments& mm);

// Same machinery with the quadratic block forced to zero: B = P_xy P_yy^-1.
AugmentedGain linear_gain(const MeasurementSpaceMoments& mm);

// x+ = x- + K [dy; reduced(dy (x) dy - stack(P_yy))],
// P+ = P- - K Pyy_aug K^T (symmetrized).
GaussianBelief quadratic_update(const GaussianBelief& prior, const AugmentedGain& gain,
                                const MeasurementSpaceMoments& mm, const Vector& y_obs);

// ---------------------------------------------------------------------------
// Full steps: predict + measurement moments + update
// ---------------------------------------------------------------------------

GaussianBelief ekf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                        const MeasurementModel& model, const NoiseMoments& noise,
                        const Vector& y_obs, double dt);

GaussianBelief ukf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                        const MeasurementModel& model, const NoiseMoments& noise,
                        const Vector& y_obs, double dt, const UtParams& params);

GaussianBelief qekf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                         const MeasurementModel& model, const NoiseMoments& noise,
                         const Vector& y_obs, double dt,
                         const StateMomentProvider& provider = {});

GaussianBelief qukf_step(const GaussianBelief& belief, const DynamicsModel& dynamics,
                         const MeasurementModel& model, const NoiseMoments& noise,
                         const Vector& y_obs, double dt, const UtParams& params);

enum class FilterKind { ekf, ukf, qekf, qukf };

const char* filter_name(FilterKind kind);
std::optional<FilterKind> filter_from_name(const std::string& name);

GaussianBelief filter_step(FilterKind kind, const GaussianBelief& belief,
                           const DynamicsModel& dynamics, const MeasurementModel& model,
                           const NoiseMoments& noise, const Vector& y_obs, double dt,
                           const UtParams& params);

}  // namespace qkf
