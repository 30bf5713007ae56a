#include "qkf/moments.hpp"

#include <array>
#include <cmath>

#include "qkf/tensor.hpp"

namespace qkf {

NoiseMoments NoiseMoments::zero(std::size_t m) {
    NoiseMoments n;
    n.dim = m;
    n.covariance = Matrix(m, m);
    n.skewness = Matrix(m, m * m);
    n.kurtosis = Matrix(m * m, m * m);
    return n;
}

Matrix isserlis_kurtosis(const Matrix& p) {
    check_dims(p.rows() == p.cols(), "isserlis_kurtosis: square covariance");
    const std::size_t n = p.rows();
    Matrix k(n * n, n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    k(i * n + j, a * n + b) =
                        p(i, j) * p(a, b) + p(i, a) * p(j, b) + p(i, b) * p(j, a);
    return k;
}

StateHighMoments gaussian_closure(const Matrix& p) {
    StateHighMoments hm;
    hm.skewness = Matrix(p.rows(), p.rows() * p.rows());
    hm.kurtosis = isserlis_kurtosis(p);
    return hm;
}

ScalarMoments discrete_moments(const Vector& support, const Vector& probs) {
    check_dims(support.size() == probs.size() && !support.empty(), "discrete_moments");
    double psum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        psum += probs[i];
        mean += probs[i] * support[i];
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw std::invalid_argument("discrete_moments: probabilities must sum to 1");
    if (std::abs(mean) > 1e-12)
        throw std::invalid_argument(
            "discrete_moments: support mean must be zero (update formulas assume zero-mean noise)");

    ScalarMoments m;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double v = support[i];
        m.variance += probs[i] * v * v;
        m.third += probs[i] * v * v * v;
        m.fourth += probs[i] * v * v * v * v;
    }
    return m;
}

NoiseMoments independent_noise_moments(const std::vector<ScalarMoments>& axes) {
    const std::size_t m = axes.size();
    NoiseMoments n = NoiseMoments::zero(m);
    for (std::size_t i = 0; i < m; ++i) n.covariance(i, i) = axes[i].variance;
    for (std::size_t i = 0; i < m; ++i) n.skewness(i, i * m + i) = axes[i].third;

    // E[n_i n_j n_k n_l] factorizes over axes; any axis raised to an odd
    // power kills the term.
    auto raw = [&](std::size_t axis, int order) -> double {
        switch (order) {
            case 0: return 1.0;
            case 2: return axes[axis].variance;
            case 4: return axes[axis].fourth;
            default: return 0.0;  // odd orders of a zero-mean axis
        }
    };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t l = 0; l < m; ++l) {
                    std::vector<int> count(m, 0);
                    ++count[i], ++count[j], ++count[k], ++count[l];
                    double e = 1.0;
                    for (std::size_t ax = 0; ax < m && e != 0.0; ++ax) e *= raw(ax, count[ax]);
                    n.kurtosis(i * m + j, k * m + l) = e;
                }
    return n;
}

NoiseMoments gaussian_noise_moments(const Matrix& p) {
    check_dims(p.rows() == p.cols(), "gaussian_noise_moments");
    NoiseMoments n = NoiseMoments::zero(p.rows());
    n.covariance = p;
    n.kurtosis = isserlis_kurtosis(p);
    return n;
}

MeasurementSpaceMoments augment_measurement_noise(const MeasurementSpaceMoments& clean,
                                                  const NoiseMoments& noise) {
    const std::size_t m = clean.meas_dim();
    check_dims(noise.dim == m && noise.covariance.rows() == m &&
                   noise.skewness.rows() == m && noise.skewness.cols() == m * m &&
                   noise.kurtosis.rows() == m * m && noise.kurtosis.cols() == m * m,
               "augment_measurement_noise: noise moments");
    check_dims(clean.p_yy.rows() == m && clean.p_yy2.cols() == m * m &&
                   clean.p_y2y2.rows() == m * m,
               "augment_measurement_noise: clean moments");

    const Matrix& pbar = clean.p_yy;
    const Matrix& pnn = noise.covariance;
    const Matrix eye = Matrix::identity(m);
    const Vector v_pbar = stack(pbar);
    const Vector v_pnn = stack(pnn);

    // m(v(A) (x) I): the m^3 x m Kronecker column reshaped column-major into
    // an m^2 x m^2 matrix.
    auto reshaped_kron = [&](const Vector& v) {
        return unstack(stack(kron(Matrix::column(v), eye)), m * m, m * m);
    };

    MeasurementSpaceMoments out = clean;
    out.p_yy = symmetrized(pbar + pnn);
    out.p_yy2 = clean.p_yy2 + noise.skewness;

    Matrix p4 = clean.p_y2y2 + noise.kurtosis;
    p4 += kron(pbar, pnn);
    p4 += reshaped_kron(v_pbar) * kron(pnn.transposed(), eye);
    p4 += kron(pnn, pbar);
    p4 += reshaped_kron(v_pnn) * kron(pbar.transposed(), eye);
    add_outer(p4, 1.0, v_pbar, v_pnn);
    add_outer(p4, 1.0, v_pnn, v_pbar);
    out.p_y2y2 = symmetrized(p4);

    out.noise_included = true;
    return out;
}

}  // namespace qkf
