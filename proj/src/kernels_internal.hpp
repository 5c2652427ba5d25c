#pragma once

#include <cstddef>

// Backend entry points shared between the dispatcher and the per-ISA
// translation units. Not installed; include only from src/.
namespace funscreen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept;
double sumsq_scalar(const double* a, std::size_t n) noexcept;
double sqdist_scalar(const double* a, const double* b, std::size_t n) noexcept;
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept;
double wrap_factor_scalar(const double* a, const double* b, std::size_t n) noexcept;

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept;
double sumsq_avx2(const double* a, std::size_t n) noexcept;
double sqdist_avx2(const double* a, const double* b, std::size_t n) noexcept;
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept;
double wrap_factor_avx2(const double* a, const double* b, std::size_t n) noexcept;

}  // namespace funscreen::kernels::detail
