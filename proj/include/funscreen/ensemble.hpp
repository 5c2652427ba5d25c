#pragma once

#include <string>
#include <vector>

#include "funscreen/matrix.hpp"

namespace funscreen {

// n curves sampled on a shared strictly increasing time grid of length T.
// Row i of `values` is curve i.
struct CurveEnsemble {
    Matrix values;
    std::vector<double> time_grid;

    // Validates shape, finiteness and grid monotonicity.
    CurveEnsemble(Matrix v, std::vector<double> grid);

    // Grid defaults to 1..T.
    explicit CurveEnsemble(Matrix v);

    std::size_t size() const noexcept { return values.rows(); }
    std::size_t length() const noexcept { return values.cols(); }
};

// Column-centered data plus the statistics the decomposition works from.
// total_inertia is the sum of squares of every centered entry.
struct CenteredEnsemble {
    Matrix centered;
    std::vector<double> column_means;
    double total_inertia = 0.0;
};

// Reads an n x T curve matrix; the time grid defaults to 1..T.
CurveEnsemble load_curve_matrix(const std::string& path, bool has_header);

CenteredEnsemble center_and_inertia(const Matrix& values);
CenteredEnsemble center_and_inertia(const CurveEnsemble& e);

}  // namespace funscreen
