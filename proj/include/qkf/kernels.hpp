// Low-level array kernels behind the dense linear algebra type.
//
// Every kernel has a scalar reference implementation and, on x86 builds, an
// AVX2/FMA variant. The active set is chosen once at startup from CPUID and
// can be overridden (QKF_KERNELS=scalar|avx2 or select_backend) so the two
// paths can be equivalence-tested against each other.
#pragma once

#include <cstddef>
#include <string>

namespace qkf::kernels {

// y[i] += a * x[i]
using AxpyFn = void (*)(double a, const double* x, double* y, std::size_t n);
// sum_i x[i] * y[i]
using DotFn = double (*)(const double* x, const double* y, std::size_t n);
// y[i] = a * x[i]
using ScaleCopyFn = void (*)(double a, const double* x, double* y, std::size_t n);

struct KernelSet {
    AxpyFn axpy;
    DotFn dot;
    ScaleCopyFn scale_copy;
    const char* name;
};

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void scale_copy(double a, const double* x, double* y, std::size_t n);
extern const KernelSet kernels;
}  // namespace scalar

#if defined(QKF_HAVE_AVX2_BUILD)
namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void scale_copy(double a, const double* x, double* y, std::size_t n);
extern const KernelSet kernels;
}  // namespace avx2
#endif

enum class Backend { automatic, scalar, avx2 };

// Active kernel set. Initialized on first use; thread-safe to read.
const KernelSet& active();

// Force a backend (tests). Backend::avx2 throws if unsupported on this CPU.
void select_backend(Backend b);
bool avx2_available();
std::string active_name();

inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void scale_copy(double a, const double* x, double* y, std::size_t n) { active().scale_copy(a, x, y, n); }

}  // namespace qkf::kernels
