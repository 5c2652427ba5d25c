#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "funscreen/matrix.hpp"

namespace funscreen {

// Symmetrized k-nearest-neighbour graph over the distinct rows of a curve
// matrix. Identical rows are collapsed onto one representative so that zero
// distances cannot produce degenerate neighbourhoods; the representative map
// carries results back to the original row order.
struct KnnGraph {
    std::size_t n = 0;                            // original row count
    std::vector<std::size_t> representative;      // row -> distinct-node id
    std::vector<std::size_t> node_row;            // distinct-node id -> first row
    std::vector<std::vector<std::size_t>> adjacency;
    std::vector<std::vector<double>> lengths;     // parallel to adjacency
    std::size_t k_used = 0;
    std::vector<std::size_t> component;           // distinct-node id -> component id
    std::size_t component_count = 0;

    std::size_t nodes() const { return node_row.size(); }
};

// k = 0 picks ceil(sqrt(n)); the effective k is clamped to nodes-1. An edge
// is kept when either endpoint lists the other among its k nearest.
KnnGraph build_knn_graph(const Matrix& curves, std::size_t k = 0);

// Expected round-trip length of the natural random walk between every pair
// of rows. Edge similarities are exp(-d^2 / s2) with s2 the mean squared
// edge length, so the result is invariant to a uniform rescaling of the
// curves. Pairs in different graph components are infinite; duplicate rows
// are at distance zero.
Matrix commute_time_distances(const KnnGraph& g);

// Agglomeration record in the usual linkage layout: leaves are 0..n-1 and
// the merge at step t creates node n+t.
struct WardTree {
    struct Merge {
        std::size_t left = 0;
        std::size_t right = 0;
        double height = 0.0;
        std::size_t size = 0;
    };
    std::size_t n_leaves = 0;
    std::vector<Merge> merges;

    // Cut into k clusters; labels are 0..k-1 ordered by each cluster's
    // smallest member row.
    std::vector<int> labels_at(std::size_t k) const;
};

// Ward's minimum-variance agglomeration from a square symmetric distance
// matrix, via nearest-neighbour chains with the Lance-Williams update on
// squared distances. Heights are nondecreasing; infinite distances merge
// last.
WardTree ward_linkage(const Matrix& distances);

std::vector<int> ward_cluster(const Matrix& distances, std::size_t k);

struct ClusterResult {
    std::vector<int> labels;
    WardTree tree;
    Matrix distances;   // sqrt of commute times, n x n
    std::size_t k = 0;
};

// Full pipeline: graph, commute times, Ward on the square-rooted matrix.
ClusterResult cluster_curves(const Matrix& curves, std::size_t k, std::size_t knn = 0);

struct ClusterCountEstimate {
    std::size_t k = 0;
    bool no_structure = false;
    std::vector<double> stability;   // index i holds the score for K = i+2
    std::vector<double> agreement;   // raw cross-half agreement per K
};

// Split-half stability scan over K = 2..k_max. Each subsample shuffles the
// rows, clusters both halves independently, transfers one half's labels to
// the other by nearest centroid and measures the best label-permutation
// agreement. Scores are rescaled so chance agreement maps to zero; the flag
// reports when even the best K barely beats chance.
ClusterCountEstimate estimate_cluster_count(const Matrix& curves, std::size_t k_max,
                                            std::size_t subsamples, std::uint64_t seed);

}  // namespace funscreen
