#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "funscreen/design.hpp"
#include "funscreen/matrix.hpp"
#include "funscreen/metamodel.hpp"

namespace funscreen {

// Deterministic shuffled partition of 0..n-1 into `folds` parts whose sizes
// differ by at most one; indices inside each fold are ascending.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t folds,
                                                    std::uint64_t seed);

// Pointwise scores of predictions against a test fold. MSE_t is the mean
// squared error of column t; Q2_t = 1 - sum_i (y - yhat)^2 / sum_i (y - ybar)^2.
// Columns whose variance is at or below 1e-12 * scale^2, with scale the
// largest |y| over the fold, carry no signal: their q2 is NaN and their index
// is listed in undefined_columns.
struct CurveFit {
    std::vector<double> mse;
    std::vector<double> q2;
    std::vector<std::size_t> undefined_columns;
};
CurveFit mse_q2_curves(const Matrix& y_true, const Matrix& y_pred);

// Out-of-fold evaluation of the functional metamodel: every fold is
// predicted by a model fitted on the remaining folds (folds run in
// parallel), and the pooled predictions are scored as one test set. Row i of
// `predictions` therefore never saw row i during training.
struct ValidationReport {
    std::vector<double> mse_curve;
    std::vector<double> q2_curve;                 // NaN marks undefined columns
    std::vector<std::size_t> undefined_columns;
    std::size_t fold_count = 0;
    std::vector<std::vector<std::size_t>> folds;
    Matrix predictions;                           // n x T
};
ValidationReport cross_validate(const Matrix& x, const Matrix& y, const MetamodelConfig& config,
                                std::size_t folds, std::uint64_t seed);

// Curves that are exactly linear in a +-1 design, built by replicating a
// full factorial: Y_i(t) = sum_j a_j(t) X_ij with smooth random coefficient
// curves. The sensitivity share of each factor is then available in closed
// form, gsi_j = sum_t a_j(t)^2 / sum_l sum_t a_l(t)^2, which makes the
// screening pipeline checkable to near machine precision. Requires n to be a
// multiple of 2^p.
struct LinearBenchmark {
    DesignMatrix design;        // n x p, +-1 coding
    Matrix curves;              // n x T
    Matrix coefficients;        // p x T coefficient curves a_j
    std::vector<double> gsi;    // analytic shares, sum to 1
};
LinearBenchmark make_linear_benchmark(std::size_t n, std::size_t p, std::size_t t_len,
                                      std::uint64_t seed);

// Curve families driven by two latent parameters through fixed orthonormal
// bases, with the ground truth returned for verification. `plane` spans an
// affine 2-plane; `roll` wraps the latents onto a spiral sheet whose
// isometric coordinates (arc length, height) are the returned latents;
// `two_regime` mixes two well-separated families and also returns the true
// labels. Inputs are a midpoint Latin hypercube in [0, 1]^p (per-regime
// blocks for two_regime); the latents are smooth functions of the first two
// input columns.
enum class ManifoldKind { plane, roll, two_regime };
struct ManifoldBenchmark {
    Matrix inputs;              // n x p
    Matrix curves;              // n x T
    Matrix latents;             // n x 2
    std::vector<int> labels;    // two_regime only, else empty
};
ManifoldBenchmark make_manifold_benchmark(std::size_t n, std::size_t t_len, std::uint64_t seed,
                                          ManifoldKind kind, std::size_t p = 2);

}  // namespace funscreen
