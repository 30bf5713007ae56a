// Third/fourth-order central moment machinery: Gaussian (Isserlis) closure,
// finite-support noise moments, and the additive-noise augmentation of the
// measurement-space covariance blocks.
//
// Matricized storage: skewness S is n x n^2 with S(i, j*n+k) = E[x_i x_j x_k];
// kurtosis K is n^2 x n^2 with K(i*n+j, k*n+l) = E[x_i x_j x_k x_l]. These are
// the shapes every update formula consumes.
#pragma once

#include <functional>

#include "qkf/linalg.hpp"

namespace qkf {

class RngStream;

struct DegenerateMomentsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero-mean noise description up to fourth order.
struct NoiseMoments {
    std::size_t dim = 0;
    Matrix covariance;  // m x m
    Matrix skewness;    // m x m^2
    Matrix kurtosis;    // m^2 x m^2
    // Optional draw hook for simulation; unused by the moment algebra.
    std::function<Vector(RngStream&)> sampler;

    static NoiseMoments zero(std::size_t m);
};

struct StateHighMoments {
    Matrix skewness;  // n x n^2
    Matrix kurtosis;  // n^2 x n^2
};

// Predicted measurement mean plus the six (cross-)covariance blocks of the
// quadratic update, before or after measurement noise per `noise_included`.
struct MeasurementSpaceMoments {
    Vector y_hat;    // m
    Matrix p_xy;     // n x m
    Matrix p_xy2;    // n x m^2
    Matrix p_yy;     // m x m
    Matrix p_yy2;    // m x m^2
    Matrix p_y2y2;   // m^2 x m^2  (raw fourth moment E[dy2 dy2^T])
    bool noise_included = false;

    std::size_t meas_dim() const { return y_hat.size(); }
    std::size_t state_dim() const { return p_xy.rows(); }
};

// Gaussian fourth moment: K(i,j,k,l) = P_ij P_kl + P_ik P_jl + P_il P_jk.
Matrix isserlis_kurtosis(const Matrix& p);

// Zero skewness, Isserlis kurtosis.
StateHighMoments gaussian_closure(const Matrix& p);

// Central moments of one scalar noise axis.
struct ScalarMoments {
    double variance = 0.0;
    double third = 0.0;
    double fourth = 0.0;
};

// Exact moments of a finite zero-mean distribution. Throws when probs do not
// sum to 1 or the support mean is nonzero (tolerance 1e-12): the update
// formulas assume zero-mean noise.
ScalarMoments discrete_moments(const Vector& support, const Vector& probs);

// Joint moments of a vector noise with mutually independent axes. Cross-axis
// third moments vanish; fourth moments follow E[n_i^2 n_j^2] = var_i var_j.
NoiseMoments independent_noise_moments(const std::vector<ScalarMoments>& axes);

// Gaussian noise with covariance p (skewness 0, Isserlis kurtosis).
NoiseMoments gaussian_noise_moments(const Matrix& p);

// Add zero-mean additive noise to clean (noise-free) measurement moments:
//   P_yy   += P_nn
//   P_yy2  += S_nnn
//   P_y2y2 += K_nnnn + Pbar_yy (x) P_nn + P_nn (x) Pbar_yy
//           + m(v(Pbar_yy) (x) I)(P_nn^T (x) I) + m(v(P_nn) (x) I)(Pbar_yy^T (x) I)
//           + v(Pbar_yy) v(P_nn)^T + v(P_nn) v(Pbar_yy)^T
// which is exact for independent zero-mean signal and noise.
MeasurementSpaceMoments augment_measurement_noise(const MeasurementSpaceMoments& clean,
                                                  const NoiseMoments& noise);

}  // namespace qkf
