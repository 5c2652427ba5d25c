#pragma once

// Test-only reference implementations, deliberately independent of the
// library's numerics: plain loops, no kernels, no Eigen.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracles {

struct EigenPairs {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] matches values[k]
};

// Cyclic Jacobi rotations on a dense symmetric matrix (row-major, size n*n).
inline EigenPairs jacobi_eigen(std::vector<double> a, std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off <= 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
    EigenPairs out;
    for (std::size_t k : order) {
        out.values.push_back(a[k * n + k]);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v[i * n + k];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

// Wrap-around discrepancy by the definition, triple loop.
inline double naive_wrap_discrepancy(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size();
    const std::size_t p = x.front().size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double prod = 1.0;
            for (std::size_t l = 0; l < p; ++l) {
                const double d = std::fabs(x[i][l] - x[j][l]);
                prod *= 1.5 - d * (1.0 - d);
            }
            sum += prod;
        }
    return -std::pow(4.0 / 3.0, static_cast<double>(p)) +
           sum / (static_cast<double>(n) * static_cast<double>(n));
}

// All-pairs shortest paths on a dense weight matrix (0 diag, inf = no edge).
inline std::vector<std::vector<double>> floyd_warshall(std::vector<std::vector<double>> d) {
    const std::size_t n = d.size();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

}  // namespace oracles
