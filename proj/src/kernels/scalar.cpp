// Portable reference kernels. These define the semantics the SIMD variants
// are tested against.

#include "l1surface/kernels.hpp"

namespace l1surface::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(MatrixView a, const double* x, double* y) {
    for (std::size_t i = 0; i < a.rows; ++i) y[i] = dot(a.data + i * a.stride, x, a.cols);
}

}  // namespace l1surface::kernels::scalar
