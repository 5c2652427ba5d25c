#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "funscreen/matrix.hpp"
#include "funscreen/pca.hpp"

namespace funscreen {

// Logarithmic mean of the squared nearest and farthest neighbour distances,
// the local kernel width used by the functional k-nearest-neighbour
// predictor. Distances must be ascending and strictly positive; a zero
// nearest distance means the training inputs contain duplicates.
double local_sigma(const std::vector<double>& distances_sorted);

// Leave-one-out choice of the neighbour count over the grid
// {1, 2, 3, 5, 8, 13, ceil(sqrt(m))} clamped to [1, m-1]; ties resolve to
// the smaller k.
std::size_t fknn_select_k(const Matrix& train_x, const Matrix& train_y);

// Gaussian-weighted mean of the k nearest training curves. Each neighbour's
// weight is exp(-|x - X_j|^2 / sigma_j^2) with sigma_j the local width at
// that training point; weights are normalized to sum to one, so the
// prediction stays inside the pointwise envelope of the neighbour curves.
// k = 0 picks the count by leave-one-out cross-validation. Distances are
// taken on the inputs as given: rescale heterogeneous dimensions first.
std::vector<double> fknn_predict(const Matrix& train_x, const Matrix& train_y,
                                 const std::vector<double>& x, std::size_t k);

// One additive ridge: weight * g(direction . x), with g tabulated at the
// training projections and interpolated linearly in between. Outside the
// knot range g clamps to its boundary values.
struct RidgeTerm {
    std::vector<double> direction;   // unit length
    std::vector<double> knots;       // ascending projection values
    std::vector<double> values;      // smoothed response at each knot
    double bandwidth = 0.0;
    double weight = 0.0;
};

// Scalar regressor for one reduced coordinate: either a sum of ridge terms
// (projection pursuit) or a Gaussian-weighted nearest-neighbour table.
struct ScalarRegressor {
    enum class Kind { ppr, knn };
    Kind kind = Kind::ppr;

    double intercept = 0.0;
    std::vector<RidgeTerm> terms;
    std::vector<double> rss;         // rss[0] about the mean, then after each term

    Matrix knn_inputs;
    Matrix knn_targets;              // m x 1
    std::size_t knn_k = 0;
};

// Forward-stagewise projection pursuit: each stage screens candidate
// directions (coordinate axes, the least-squares direction and seeded random
// draws) by a binned variance-explained score, refines the best by
// Gauss-Newton steps on the smoothed objective, then fits a local-linear
// smoother whose bandwidth minimizes generalized cross-validation. Term
// weights are least-squares coefficients, so the training residual sum of
// squares never increases. The first term is always kept; fitting stops when
// a later term improves the residual by less than 1e-3 relative, or at
// max_terms. Needs at least 10 samples.
ScalarRegressor ppr_fit(const Matrix& x, const std::vector<double>& z, std::size_t max_terms,
                        std::uint64_t seed);

// intercept + sum of weighted ridge functions; extrapolation beyond a term's
// knot range clamps to the boundary value.
double ppr_predict(const ScalarRegressor& model, const std::vector<double>& x);

// Nearest-neighbour regressor over scalar targets; k = 0 picks the count by
// leave-one-out cross-validation.
ScalarRegressor knn_fit(const Matrix& x, const std::vector<double>& z, std::size_t k);

// Dispatches on the regressor kind.
double scalar_predict(const ScalarRegressor& model, const std::vector<double>& x);

enum class ReducerKind { pca, rml, none };
enum class RegressorKind { ppr, knn };

struct MetamodelConfig {
    std::size_t clusters = 1;        // 0 = choose by split-half stability
    ReducerKind reducer = ReducerKind::pca;
    std::size_t dims = 0;            // pca: component count (0 = by x_percent); rml: target dimension
    RegressorKind regressor = RegressorKind::ppr;
    std::size_t k = 0;               // neighbour count for rml, knn and fknn; 0 = default / cross-validated
    double x_percent = 99.0;         // inertia retained when dims = 0
    std::size_t max_terms = 6;       // projection pursuit budget
    std::uint64_t seed = 0;
};

// Per-cluster reduce-and-regress model. Exactly one reducer is active:
// principal components keep the decomposition and a component count (zero
// means the cluster is constant and the column means are the prediction),
// the manifold reducer keeps the training curves and their embedded
// coordinates, and the direct predictor keeps the cluster's inputs and
// curves for functional nearest neighbours.
struct ClusterModel {
    ReducerKind reducer = ReducerKind::pca;

    PcaResult pca;
    std::size_t t0 = 0;

    Matrix curves;                   // rml + fknn training curves
    Matrix coords;                   // rml embedded coordinates
    Matrix inputs;                   // fknn scaled inputs
    std::size_t k = 0;               // rml / fknn neighbour count

    std::vector<ScalarRegressor> regressors;   // one per reduced coordinate
};

// Full pipeline state: cluster labels and a nearest-neighbour classifier on
// min-max scaled inputs, plus one ClusterModel per label. Duplicate input
// rows are merged before fitting (curves averaged) and every departure from
// the requested configuration is recorded in warnings.
struct FunctionalMetamodel {
    MetamodelConfig config;
    std::size_t p = 0;
    std::size_t t = 0;

    std::vector<double> input_min;   // per-dimension training minimum
    std::vector<double> input_range; // max - min, 1 for degenerate dimensions
    Matrix inputs;                   // m x p, scaled to [0, 1]
    std::vector<int> labels;
    std::vector<double> merge_heights;  // ward heights when clustering ran, else empty
    std::size_t classifier_k = 0;

    std::vector<ClusterModel> clusters;
    std::vector<std::string> warnings;
};

FunctionalMetamodel fit_functional_metamodel(const Matrix& x, const Matrix& y,
                                             const MetamodelConfig& config);

// Which cluster served a prediction and the regressed reduced coordinates
// (empty for the direct predictor and for constant clusters).
struct PredictionInfo {
    std::size_t cluster = 0;
    std::vector<double> reduced;
};

// Classify, regress each reduced coordinate, reconstruct.
std::vector<double> predict_functional(const FunctionalMetamodel& model,
                                       const std::vector<double>& x,
                                       PredictionInfo* info = nullptr);

}  // namespace funscreen
