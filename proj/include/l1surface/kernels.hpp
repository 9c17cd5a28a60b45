#pragma once

// Dense inner-loop kernels used by basis assembly, mollifier quadrature and
// the simplex pricing step.
//
// Each kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2/FMA variant. The variant is chosen once at runtime from CPUID; the
// environment variable L1SURFACE_KERNELS=scalar forces the reference path.
// The two paths agree to rounding (summation order differs), see
// tests/test_kernels.cpp.

#include <cstddef>
#include <span>
#include <string_view>

namespace l1surface::kernels {

enum class Isa { scalar, avx2 };

/// Row-major matrix view. Row i starts at data + i * stride.
struct MatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 0;
};

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using GemvFn = void (*)(MatrixView, const double*, double*);

struct KernelTable {
    Isa isa;
    DotFn dot;
    AxpyFn axpy;
    GemvFn gemv;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(MatrixView a, const double* x, double* y);
}  // namespace scalar

#if defined(L1SURFACE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(MatrixView a, const double* x, double* y);
}  // namespace avx2
#endif

/// True when the AVX2 variants were compiled in and the CPU supports AVX2+FMA.
bool avx2_available() noexcept;

/// Currently selected table.
const KernelTable& active() noexcept;

/// Overrides the runtime choice. Falls back to scalar if the ISA is unavailable.
/// Returns the ISA actually selected.
Isa select(Isa isa) noexcept;

std::string_view name(Isa isa) noexcept;

// Convenience wrappers over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

/// y = A x
inline void gemv(MatrixView a, std::span<const double> x, std::span<double> y) {
    active().gemv(a, x.data(), y.data());
}

}  // namespace l1surface::kernels
