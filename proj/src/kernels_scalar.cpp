#include <cmath>

#include "kernels_internal.hpp"

// Reference implementations: one accumulator, strict left-to-right order.
// Every other backend is tested against these.
namespace funscreen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sumsq_scalar(const double* a, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double wrap_factor_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(a[i] - b[i]);
        prod *= 1.5 - d * (1.0 - d);
    }
    return prod;
}

}  // namespace funscreen::kernels::detail
