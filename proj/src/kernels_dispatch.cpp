#include "funscreen/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_internal.hpp"

namespace funscreen::kernels {

namespace {

struct Vtable {
    double (*dot)(const double*, const double*, std::size_t) noexcept;
    double (*sumsq)(const double*, std::size_t) noexcept;
    double (*sqdist)(const double*, const double*, std::size_t) noexcept;
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
    double (*wrap_factor)(const double*, const double*, std::size_t) noexcept;
};

constexpr Vtable kScalar{detail::dot_scalar, detail::sumsq_scalar, detail::sqdist_scalar,
                         detail::axpy_scalar, detail::wrap_factor_scalar};
constexpr Vtable kAvx2{detail::dot_avx2, detail::sumsq_avx2, detail::sqdist_avx2,
                       detail::axpy_avx2, detail::wrap_factor_avx2};

bool detect_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() noexcept {
    const bool host_ok = detect_avx2();
    const char* env = std::getenv("FUNSCREEN_SIMD");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && host_ok) return Backend::avx2;
        // "auto", unknown values, or avx2 on an unsupported host: fall through.
    }
    return host_ok ? Backend::avx2 : Backend::scalar;
}

std::atomic<const Vtable*> g_vtable{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const Vtable* table() noexcept {
    const Vtable* t = g_vtable.load(std::memory_order_acquire);
    if (t == nullptr) {
        const Backend b = initial_backend();
        t = (b == Backend::avx2) ? &kAvx2 : &kScalar;
        g_backend.store(b, std::memory_order_relaxed);
        g_vtable.store(t, std::memory_order_release);
    }
    return t;
}

}  // namespace

bool host_supports_avx2() noexcept { return detect_avx2(); }

Backend active_backend() noexcept {
    table();
    return g_backend.load(std::memory_order_relaxed);
}

bool set_backend(Backend b) noexcept {
    if (b == Backend::avx2 && !detect_avx2()) return false;
    g_backend.store(b, std::memory_order_relaxed);
    g_vtable.store(b == Backend::avx2 ? &kAvx2 : &kScalar, std::memory_order_release);
    return true;
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
    return table()->dot(a, b, n);
}

double sumsq(const double* a, std::size_t n) noexcept { return table()->sumsq(a, n); }

double sqdist(const double* a, const double* b, std::size_t n) noexcept {
    return table()->sqdist(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
    table()->axpy(alpha, x, y, n);
}

double wrap_factor(const double* a, const double* b, std::size_t n) noexcept {
    return table()->wrap_factor(a, b, n);
}

}  // namespace funscreen::kernels
