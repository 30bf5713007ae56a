#include "qkf/random.hpp"

#include <cmath>

namespace qkf {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

double RngStream::uniform01() {
    // 53-bit mantissa in (0, 1); never returns exactly 0, safe under log().
    const uint64_t bits = eng_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

Vector RngStream::normal_vector(std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = normal();
    return v;
}

std::size_t RngStream::categorical(const Vector& probs) {
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

Vector sample_gaussian(RngStream& rng, const Vector& mean, const Matrix& cov_cholesky) {
    check_dims(cov_cholesky.rows() == mean.size() && cov_cholesky.cols() == mean.size(),
               "sample_gaussian");
    Vector z = rng.normal_vector(mean.size());
    Vector x = mean;
    for (std::size_t i = 0; i < mean.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) x[i] += cov_cholesky(i, j) * z[j];
    return x;
}

}  // namespace qkf
