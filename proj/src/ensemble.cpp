#include "funscreen/ensemble.hpp"

#include <cmath>

#include "funscreen/csv.hpp"
#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"

namespace funscreen {

namespace {

void validate(const Matrix& v, const std::vector<double>& grid) {
    if (v.rows() == 0 || v.cols() == 0) throw DimensionError("curve ensemble is empty");
    if (grid.size() != v.cols())
        throw DimensionError("time grid has " + std::to_string(grid.size()) +
                             " points, curves have " + std::to_string(v.cols()));
    if (!v.all_finite()) throw DomainError("curve ensemble contains non-finite values");
    for (std::size_t t = 1; t < grid.size(); ++t)
        if (!(grid[t] > grid[t - 1]))
            throw DomainError("time grid not strictly increasing at index " + std::to_string(t + 1));
    if (!grid.empty() && !std::isfinite(grid.front()))
        throw DomainError("time grid contains non-finite values");
}

std::vector<double> default_grid(std::size_t t) {
    std::vector<double> g(t);
    for (std::size_t i = 0; i < t; ++i) g[i] = static_cast<double>(i + 1);
    return g;
}

}  // namespace

CurveEnsemble::CurveEnsemble(Matrix v, std::vector<double> grid)
    : values(std::move(v)), time_grid(std::move(grid)) {
    validate(values, time_grid);
}

CurveEnsemble::CurveEnsemble(Matrix v) : values(std::move(v)), time_grid(default_grid(values.cols())) {
    validate(values, time_grid);
}

CurveEnsemble load_curve_matrix(const std::string& path, bool has_header) {
    CsvTable t = read_csv(path, has_header);
    if (!t.values.all_finite())
        throw DomainError("curve matrix '" + path + "' contains missing or non-finite values");
    return CurveEnsemble(std::move(t.values));
}

CenteredEnsemble center_and_inertia(const Matrix& values) {
    if (values.rows() == 0 || values.cols() == 0) throw DimensionError("cannot center an empty matrix");
    if (!values.all_finite()) throw DomainError("matrix contains non-finite values");

    const std::size_t n = values.rows();
    const std::size_t t = values.cols();
    CenteredEnsemble out;
    out.column_means.assign(t, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        kernels::axpy(1.0, values.row(i), out.column_means.data(), t);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& m : out.column_means) m *= inv_n;

    out.centered = Matrix(n, t);
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = values.row(i);
        double* dst = out.centered.row(i);
        for (std::size_t j = 0; j < t; ++j) dst[j] = src[j] - out.column_means[j];
    }

    // Summed row by row in index order so the result does not depend on any
    // parallel partitioning elsewhere.
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += kernels::sumsq(out.centered.row(i), t);
    out.total_inertia = inertia;
    return out;
}

CenteredEnsemble center_and_inertia(const CurveEnsemble& e) { return center_and_inertia(e.values); }

}  // namespace funscreen
