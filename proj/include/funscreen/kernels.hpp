#pragma once

#include <cstddef>

// Dense inner-loop kernels. Scalar implementations are the reference; AVX2
// variants are selected once at startup when the host supports AVX2+FMA.
// FUNSCREEN_SIMD=scalar|avx2|auto overrides detection (unsupported or unknown
// values fall back to auto). Backends may differ in the last few ulps because
// of FMA and reassociation; equivalence tests bound that gap.
namespace funscreen::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend() noexcept;

// Forces a backend, returning false (and leaving the active one unchanged)
// when the host cannot run it. Intended for tests.
bool set_backend(Backend b) noexcept;

bool host_supports_avx2() noexcept;

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n) noexcept;

// sum_i a[i]^2
double sumsq(const double* a, std::size_t n) noexcept;

// sum_i (a[i] - b[i])^2
double sqdist(const double* a, const double* b, std::size_t n) noexcept;

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;

// prod_i (3/2 - |a[i] - b[i]| * (1 - |a[i] - b[i]|)), the per-pair factor of
// the wrap-around discrepancy double sum. Requires |a[i] - b[i]| <= 1.
double wrap_factor(const double* a, const double* b, std::size_t n) noexcept;

}  // namespace funscreen::kernels
