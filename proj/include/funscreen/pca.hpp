#pragma once

#include <cstddef>
#include <vector>

#include "funscreen/ensemble.hpp"
#include "funscreen/matrix.hpp"

namespace funscreen {

// Eigendecomposition of the centered cross-product. Eigenvalues are
// descending and strictly above the floor 1e-12 * lambda_1; rank never
// exceeds min(n-1, T). Component rows are unit length with the
// largest-magnitude entry positive, so signs are reproducible. scores(i,k) is
// the projection of centered curve i on component k, and sum(eigenvalues)
// equals total_inertia up to round-off.
struct PcaResult {
    std::vector<double> eigenvalues;
    Matrix components;  // rank x T
    Matrix scores;      // n x rank
    std::vector<double> column_means;
    double total_inertia = 0.0;

    std::size_t rank() const noexcept { return eigenvalues.size(); }
};

// Chooses the T x T cross-product or the n x n Gram route, whichever is
// smaller, and back-transforms in the latter case.
PcaResult pca_decompose(const CenteredEnsemble& ce);

// Smallest component count whose cumulative inertia reaches x_percent of the
// total. Exact-boundary cases resolve to the smaller count. Zero total
// inertia is an error: there is nothing to retain.
std::size_t truncate_components(const PcaResult& p, double x_percent);

// scores (m x t0) -> curves (m x T), adding back the column means.
Matrix reconstruct_from_scores(const PcaResult& p, const Matrix& scores, std::size_t t0);

// (k, t) entry is the Pearson correlation of score column k with output
// column t, for k < k_max. Constant columns yield 0 by convention.
Matrix pc_correlations(const PcaResult& p, const Matrix& y, std::size_t k_max);

}  // namespace funscreen
