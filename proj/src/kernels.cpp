#include "qkf/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

namespace qkf::kernels {

namespace scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void scale_copy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

const KernelSet kernels{&axpy, &dot, &scale_copy, "scalar"};

}  // namespace scalar

bool avx2_available() {
#if defined(QKF_HAVE_AVX2_BUILD) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const KernelSet* pick(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &scalar::kernels;
        case Backend::avx2:
#if defined(QKF_HAVE_AVX2_BUILD)
            if (avx2_available()) return &avx2::kernels;
#endif
            throw std::runtime_error("avx2 kernels not available on this cpu/build");
        case Backend::automatic:
        default:
#if defined(QKF_HAVE_AVX2_BUILD)
            if (avx2_available()) {
                const char* env = std::getenv("QKF_KERNELS");
                if (!(env && std::string(env) == "scalar")) return &avx2::kernels;
            }
#endif
            return &scalar::kernels;
    }
}

std::atomic<const KernelSet*> g_active{nullptr};

}  // namespace

const KernelSet& active() {
    const KernelSet* k = g_active.load(std::memory_order_acquire);
    if (!k) {
        k = pick(Backend::automatic);
        g_active.store(k, std::memory_order_release);
    }
    return *k;
}

void select_backend(Backend b) { g_active.store(pick(b), std::memory_order_release); }

std::string active_name() { return active().name; }

}  // namespace qkf::kernels
