// AVX2/FMA kernels. Compiled with -mavx2 -mfma; only called after the
// dispatcher has checked CPUID.

#include "l1surface/kernels.hpp"

#include <immintrin.h>

namespace l1surface::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    // four independent accumulators hide the FMA latency
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    double s = hsum(acc0);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(MatrixView a, const double* x, double* y) {
    // Two rows at a time share the loads of x.
    std::size_t r = 0;
    const std::size_t n = a.cols;
    for (; r + 2 <= a.rows; r += 2) {
        const double* r0 = a.data + r * a.stride;
        const double* r1 = r0 + a.stride;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            const __m256d vx = _mm256_loadu_pd(x + i);
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + i), vx, acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + i), vx, acc1);
        }
        double s0 = hsum(acc0);
        double s1 = hsum(acc1);
        for (; i < n; ++i) {
            s0 += r0[i] * x[i];
            s1 += r1[i] * x[i];
        }
        y[r] = s0;
        y[r + 1] = s1;
    }
    for (; r < a.rows; ++r) y[r] = dot(a.data + r * a.stride, x, n);
}

}  // namespace l1surface::kernels::avx2
