#include "funscreen/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "funscreen/doe.hpp"
#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/rng.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols(), out.row(i));
    return out;
}

// Orthonormal curve bases drawn from a seeded stream; vector i is
// orthogonalized against everything drawn before it.
struct CurveBasis {
    std::vector<std::vector<double>> vectors;

    CurveBasis(std::size_t count, std::size_t t_len, std::uint64_t seed) {
        for (std::size_t i = 0; i < count; ++i) {
            Rng rng(seed, 200 + i);
            std::vector<double> v(t_len);
            for (double& e : v) e = rng.normal();
            for (const auto& prev : vectors) {
                const double d = kernels::dot(prev.data(), v.data(), t_len);
                kernels::axpy(-d, prev.data(), v.data(), t_len);
            }
            const double n = std::sqrt(kernels::sumsq(v.data(), t_len));
            for (double& e : v) e /= n;
            vectors.push_back(std::move(v));
        }
    }
};

// Arc length of the spiral r = theta from the origin.
double spiral_arc(double theta) {
    return 0.5 * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

void check_benchmark_shape(std::size_t n, std::size_t t_len, std::size_t p) {
    if (n < 4) throw DimensionError("benchmark needs at least 4 curves");
    if (t_len < 6) throw DimensionError("benchmark needs at least 6 time points");
    if (p < 2) throw DimensionError("benchmark needs at least 2 inputs");
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t folds,
                                                    std::uint64_t seed) {
    if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
    if (folds > n)
        throw DimensionError("folds = " + std::to_string(folds) + " exceeds the " +
                             std::to_string(n) + " samples");
    Rng rng(seed, 0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> out(folds);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t at = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                      order.begin() + static_cast<std::ptrdiff_t>(at + size));
        std::sort(out[f].begin(), out[f].end());
        at += size;
    }
    return out;
}

CurveFit mse_q2_curves(const Matrix& y_true, const Matrix& y_pred) {
    const std::size_t m = y_true.rows();
    const std::size_t t_len = y_true.cols();
    if (y_pred.rows() != m || y_pred.cols() != t_len)
        throw DimensionError("prediction matrix is " + std::to_string(y_pred.rows()) + " x " +
                             std::to_string(y_pred.cols()) + ", expected " + std::to_string(m) +
                             " x " + std::to_string(t_len));
    if (m < 2) throw DimensionError("scoring needs at least 2 test rows");

    double scale = 0.0;
    for (double v : y_true.data()) scale = std::max(scale, std::fabs(v));
    const double var_floor = 1e-12 * scale * scale;

    CurveFit out;
    out.mse.resize(t_len);
    out.q2.resize(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += y_true(i, t);
        mean /= static_cast<double>(m);
        double ss = 0.0, sse = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double c = y_true(i, t) - mean;
            const double e = y_true(i, t) - y_pred(i, t);
            ss += c * c;
            sse += e * e;
        }
        out.mse[t] = sse / static_cast<double>(m);
        if (ss / static_cast<double>(m) <= var_floor) {
            out.q2[t] = kNan;
            out.undefined_columns.push_back(t);
        } else {
            out.q2[t] = 1.0 - sse / ss;
        }
    }
    return out;
}

ValidationReport cross_validate(const Matrix& x, const Matrix& y, const MetamodelConfig& config,
                                std::size_t folds, std::uint64_t seed) {
    const std::size_t n = x.rows();
    if (y.rows() != n)
        throw DimensionError("inputs and curves disagree: " + std::to_string(n) + " vs " +
                             std::to_string(y.rows()) + " rows");

    ValidationReport report;
    report.folds = kfold_indices(n, folds, seed);
    report.fold_count = folds;
    report.predictions = Matrix(n, y.cols());

    parallel_for(folds, [&](std::size_t f) {
        const auto& test = report.folds[f];
        std::vector<std::size_t> train;
        train.reserve(n - test.size());
        for (std::size_t i = 0, at = 0; i < n; ++i) {
            if (at < test.size() && test[at] == i) {
                ++at;
                continue;
            }
            train.push_back(i);
        }
        const FunctionalMetamodel model =
            fit_functional_metamodel(take_rows(x, train), take_rows(y, train), config);
        for (const std::size_t i : test) {
            const auto pred = predict_functional(model, x.row_copy(i));
            std::copy(pred.begin(), pred.end(), report.predictions.row(i));
        }
    });

    CurveFit fit = mse_q2_curves(y, report.predictions);
    report.mse_curve = std::move(fit.mse);
    report.q2_curve = std::move(fit.q2);
    report.undefined_columns = std::move(fit.undefined_columns);
    return report;
}

LinearBenchmark make_linear_benchmark(std::size_t n, std::size_t p, std::size_t t_len,
                                      std::uint64_t seed) {
    if (p == 0 || p > 20) throw DomainError("factor count must lie in [1, 20]");
    if (t_len == 0) throw DimensionError("curves need at least one time point");
    const std::size_t block = std::size_t{1} << p;
    if (n == 0 || n % block != 0)
        throw ConstructionError("n = " + std::to_string(n) +
                                " is not a multiple of the full factorial size " +
                                std::to_string(block));

    // Replicated full factorial: orthogonal and balanced by construction.
    Matrix design(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = i % block;
        for (std::size_t j = 0; j < p; ++j)
            design(i, j) = (cell >> j) & 1 ? 1.0 : -1.0;
    }

    // Smooth coefficient curves: low-order cosine mixtures with decaying
    // harmonic amplitudes.
    Matrix coeff(p, t_len);
    for (std::size_t j = 0; j < p; ++j) {
        Rng rng(seed, j);
        double c[4];
        for (double& v : c) v = rng.normal();
        for (std::size_t t = 0; t < t_len; ++t) {
            const double s = t_len == 1 ? 0.0 : static_cast<double>(t) / (t_len - 1);
            double v = 0.0;
            for (int h = 0; h < 4; ++h)
                v += c[h] / (1.0 + h) * std::cos(3.14159265358979323846 * h * s);
            coeff(j, t) = v;
        }
    }

    Matrix curves(n, t_len);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            kernels::axpy(design(i, j), coeff.row(j), curves.row(i), t_len);

    std::vector<double> energy(p);
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        energy[j] = kernels::sumsq(coeff.row(j), t_len);
        total += energy[j];
    }
    std::vector<double> gsi(p);
    for (std::size_t j = 0; j < p; ++j) gsi[j] = energy[j] / total;

    return LinearBenchmark{DesignMatrix(std::move(design), Coding::factorial), std::move(curves),
                           std::move(coeff), std::move(gsi)};
}

ManifoldBenchmark make_manifold_benchmark(std::size_t n, std::size_t t_len, std::uint64_t seed,
                                          ManifoldKind kind, std::size_t p) {
    check_benchmark_shape(n, t_len, p);

    ManifoldBenchmark out;
    out.latents = Matrix(n, 2);
    out.curves = Matrix(n, t_len);

    const CurveBasis basis(5, t_len, seed);
    Rng offset_rng(seed, 199);
    std::vector<double> offset(t_len);
    for (double& v : offset) v = offset_rng.normal();

    if (kind == ManifoldKind::two_regime) {
        // Per-regime blocks separated in every input dimension; each family
        // uses its own basis pair and the second sits far away in curve
        // space.
        Rng rng(seed, 1);
        out.inputs = Matrix(n, p);
        out.labels.assign(n, 0);
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < n; ++i) {
            const bool high = i >= half;
            out.labels[i] = high ? 1 : 0;
            for (std::size_t j = 0; j < p; ++j)
                out.inputs(i, j) = (high ? 0.6 : 0.0) + 0.4 * rng.uniform();
            const double u = 12.5 * (out.inputs(i, 0) - (high ? 0.6 : 0.0));
            const double v = 12.5 * (out.inputs(i, 1) - (high ? 0.6 : 0.0));
            out.latents(i, 0) = u;
            out.latents(i, 1) = v;
            double* row = out.curves.row(i);
            std::copy(offset.begin(), offset.end(), row);
            if (high) {
                kernels::axpy(50.0, basis.vectors[4].data(), row, t_len);
                kernels::axpy(u, basis.vectors[2].data(), row, t_len);
                kernels::axpy(v, basis.vectors[3].data(), row, t_len);
            } else {
                kernels::axpy(u, basis.vectors[0].data(), row, t_len);
                kernels::axpy(v, basis.vectors[1].data(), row, t_len);
            }
        }
        return out;
    }

    out.inputs = optimize_lhs(static_cast<int>(n), static_cast<int>(p), 20000, seed).design.values();

    if (kind == ManifoldKind::plane) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = 5.0 * out.inputs(i, 0);
            const double v = 5.0 * out.inputs(i, 1);
            out.latents(i, 0) = u;
            out.latents(i, 1) = v;
            double* row = out.curves.row(i);
            std::copy(offset.begin(), offset.end(), row);
            kernels::axpy(u, basis.vectors[0].data(), row, t_len);
            kernels::axpy(v, basis.vectors[1].data(), row, t_len);
        }
        return out;
    }

    // Spiral sheet r = theta over 1.5 turns: wide enough that consecutive
    // windings stay several neighbourhoods apart, curved gently relative to
    // typical chord lengths. The returned latents are the isometric
    // coordinates (arc length, height).
    const double theta_lo = 2.5 * 3.14159265358979323846;
    const double theta_hi = 5.5 * 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = theta_lo + (theta_hi - theta_lo) * out.inputs(i, 0);
        const double h = 6.0 * out.inputs(i, 1);
        out.latents(i, 0) = spiral_arc(theta) - spiral_arc(theta_lo);
        out.latents(i, 1) = h;
        const double c3[3] = {theta * std::cos(theta), theta * std::sin(theta), h};
        double* row = out.curves.row(i);
        std::copy(offset.begin(), offset.end(), row);
        for (int a = 0; a < 3; ++a)
            kernels::axpy(c3[a], basis.vectors[static_cast<std::size_t>(a)].data(), row, t_len);
    }
    return out;
}

}  // namespace funscreen
