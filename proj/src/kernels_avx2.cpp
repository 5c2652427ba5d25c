// AVX2+FMA backend, 4 doubles per lane, two accumulators to hide FMA latency.
// This file is compiled with -mavx2 -mfma and must only be entered through the
// dispatcher after a capability check.

#include "kernels_internal.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace funscreen::kernels::detail {

namespace {

inline double hsum(__m256d v) noexcept {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swap = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

inline double hprod(__m256d v) noexcept {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_mul_pd(lo, hi);
    __m128d swap = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_mul_sd(lo, swap));
}

inline __m256d abs_pd(__m256d v) noexcept {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sumsq_avx2(const double* a, std::size_t n) noexcept {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d v0 = _mm256_loadu_pd(a + i);
        const __m256d v1 = _mm256_loadu_pd(a + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    if (i + 4 <= n) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) noexcept {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    if (i + 4 <= n) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double wrap_factor_avx2(const double* a, const double* b, std::size_t n) noexcept {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d three_half = _mm256_set1_pd(1.5);
    __m256d prod = one;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        // 3/2 - d * (1 - d), with the inner term fused.
        const __m256d f = _mm256_fnmadd_pd(d, _mm256_sub_pd(one, d), three_half);
        prod = _mm256_mul_pd(prod, f);
    }
    double acc = hprod(prod);
    for (; i < n; ++i) {
        const double d = std::fabs(a[i] - b[i]);
        acc *= 1.5 - d * (1.0 - d);
    }
    return acc;
}

}  // namespace funscreen::kernels::detail

#else

// Built without AVX2 flags (non-x86 host): keep the symbols, delegate to the
// scalar reference. The dispatcher never selects them in this configuration.
namespace funscreen::kernels::detail {

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
    return dot_scalar(a, b, n);
}
double sumsq_avx2(const double* a, std::size_t n) noexcept { return sumsq_scalar(a, n); }
double sqdist_avx2(const double* a, const double* b, std::size_t n) noexcept {
    return sqdist_scalar(a, b, n);
}
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept {
    axpy_scalar(alpha, x, y, n);
}
double wrap_factor_avx2(const double* a, const double* b, std::size_t n) noexcept {
    return wrap_factor_scalar(a, b, n);
}

}  // namespace funscreen::kernels::detail

#endif
