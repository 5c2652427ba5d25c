#include "funscreen/pca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

constexpr double kRankFloor = 1e-12;

// Largest-magnitude entry positive; ties resolve to the first occurrence.
void fix_sign(double* v, std::size_t n) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(v[i]);
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (v[arg] < 0.0)
        for (std::size_t i = 0; i < n; ++i) v[i] = -v[i];
}

}  // namespace

PcaResult pca_decompose(const CenteredEnsemble& ce) {
    const Matrix& yc = ce.centered;
    const std::size_t n = yc.rows();
    const std::size_t t = yc.cols();
    if (n < 2) throw DimensionError("decomposition needs at least 2 curves");

    PcaResult out;
    out.column_means = ce.column_means;
    out.total_inertia = ce.total_inertia;

    const std::size_t max_rank = std::min(n - 1, t);
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> comps;

    if (t <= n) {
        // Cross-product route: eigenvectors are the components directly.
        Matrix c(t, t);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = yc.row(i);
            for (std::size_t j = 0; j < t; ++j)
                if (row[j] != 0.0) kernels::axpy(row[j], row, c.row(j), t);
        }
        Eigen::Map<const Eigen::MatrixXd> cm(c.data().data(), t, t);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cm);
        if (es.info() != Eigen::Success) throw RankError("eigendecomposition failed to converge");
        const double lmax = std::max(0.0, es.eigenvalues()(static_cast<Eigen::Index>(t) - 1));
        const double floor = kRankFloor * lmax;
        for (Eigen::Index k = static_cast<Eigen::Index>(t) - 1; k >= 0; --k) {
            const double lambda = es.eigenvalues()(k);
            if (lambda <= floor || lambda <= 0.0) break;
            if (eigenvalues.size() == max_rank) break;
            eigenvalues.push_back(lambda);
            std::vector<double> v(t);
            for (std::size_t j = 0; j < t; ++j) v[j] = es.eigenvectors()(static_cast<Eigen::Index>(j), k);
            fix_sign(v.data(), t);
            comps.push_back(std::move(v));
        }
    } else {
        // Gram route: same non-zero spectrum, components recovered by
        // back-transformation l_k = Yc' u_k / sqrt(lambda_k).
        Matrix g(n, n);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = i; j < n; ++j) {
                const double v = kernels::dot(yc.row(i), yc.row(j), t);
                g(i, j) = v;
                g(j, i) = v;
            }
        });
        Eigen::Map<const Eigen::MatrixXd> gm(g.data().data(), n, n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gm);
        if (es.info() != Eigen::Success) throw RankError("eigendecomposition failed to converge");
        const double lmax = std::max(0.0, es.eigenvalues()(static_cast<Eigen::Index>(n) - 1));
        const double floor = kRankFloor * lmax;
        for (Eigen::Index k = static_cast<Eigen::Index>(n) - 1; k >= 0; --k) {
            const double lambda = es.eigenvalues()(k);
            if (lambda <= floor || lambda <= 0.0) break;
            if (eigenvalues.size() == max_rank) break;
            eigenvalues.push_back(lambda);
            std::vector<double> l(t, 0.0);
            const double inv = 1.0 / std::sqrt(lambda);
            for (std::size_t i = 0; i < n; ++i)
                kernels::axpy(es.eigenvectors()(static_cast<Eigen::Index>(i), k) * inv, yc.row(i),
                              l.data(), t);
            fix_sign(l.data(), t);
            comps.push_back(std::move(l));
        }
    }

    const std::size_t r = eigenvalues.size();
    out.eigenvalues = std::move(eigenvalues);
    out.components = Matrix(r, t);
    for (std::size_t k = 0; k < r; ++k)
        std::copy(comps[k].begin(), comps[k].end(), out.components.row(k));
    out.scores = Matrix(n, r);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t k = 0; k < r; ++k)
            out.scores(i, k) = kernels::dot(yc.row(i), out.components.row(k), t);
    });
    return out;
}

std::size_t truncate_components(const PcaResult& p, double x_percent) {
    if (!(x_percent > 0.0) || x_percent > 100.0)
        throw DomainError("inertia percentage must lie in (0, 100]");
    if (p.total_inertia <= 0.0 || p.rank() == 0)
        throw DomainError("total inertia is zero; no components to retain");
    const double target = x_percent * p.total_inertia;
    const double tol = 1e-9 * std::max(target, p.total_inertia);
    double cum = 0.0;
    for (std::size_t k = 0; k < p.rank(); ++k) {
        cum += p.eigenvalues[k];
        if (cum * 100.0 >= target - tol) return k + 1;
    }
    return p.rank();
}

Matrix reconstruct_from_scores(const PcaResult& p, const Matrix& scores, std::size_t t0) {
    if (t0 > p.rank())
        throw DimensionError("requested " + std::to_string(t0) + " components, rank is " +
                             std::to_string(p.rank()));
    if (scores.cols() != t0)
        throw DimensionError("score matrix has " + std::to_string(scores.cols()) +
                             " columns, expected " + std::to_string(t0));
    const std::size_t m = scores.rows();
    const std::size_t t = p.components.cols();
    Matrix out(m, t);
    parallel_for(m, [&](std::size_t i) {
        double* row = out.row(i);
        std::copy(p.column_means.begin(), p.column_means.end(), row);
        for (std::size_t k = 0; k < t0; ++k)
            kernels::axpy(scores(i, k), p.components.row(k), row, t);
    });
    return out;
}

Matrix pc_correlations(const PcaResult& p, const Matrix& y, std::size_t k_max) {
    const std::size_t n = p.scores.rows();
    if (k_max > p.rank())
        throw DimensionError("requested " + std::to_string(k_max) + " components, rank is " +
                             std::to_string(p.rank()));
    if (y.rows() != n)
        throw DimensionError("output matrix has " + std::to_string(y.rows()) +
                             " rows, expected " + std::to_string(n));
    const std::size_t t_len = y.cols();

    // Score columns are centered by construction; their variances are known
    // up to round-off, but recompute both moments for symmetry.
    std::vector<double> s_mean(k_max, 0.0), s_var(k_max, 0.0);
    for (std::size_t k = 0; k < k_max; ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += p.scores(i, k);
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = p.scores(i, k) - m;
            v += d * d;
        }
        s_mean[k] = m;
        s_var[k] = v;
    }

    Matrix out(k_max, t_len);
    parallel_for(t_len, [&](std::size_t t) {
        double y_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) y_mean += y(i, t);
        y_mean /= static_cast<double>(n);
        double y_var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = y(i, t) - y_mean;
            y_var += d * d;
        }
        for (std::size_t k = 0; k < k_max; ++k) {
            if (y_var <= 0.0 || s_var[k] <= 0.0) {
                out(k, t) = 0.0;
                continue;
            }
            double cov = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                cov += (p.scores(i, k) - s_mean[k]) * (y(i, t) - y_mean);
            out(k, t) = cov / std::sqrt(s_var[k] * y_var);
        }
    });
    return out;
}

}  // namespace funscreen
