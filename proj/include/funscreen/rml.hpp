#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "funscreen/matrix.hpp"

namespace funscreen {

// Neighborhood graph for manifold coordinates: k nearest neighbours, then a
// per-neighborhood visibility pass that removes eclipsed points, then a
// connectivity-safe prune of unusually long edges. A breadth-first walk from
// the base node drives the embedding order.
struct RmlGraph {
    std::size_t n = 0;
    std::size_t k_used = 0;
    std::vector<std::vector<std::size_t>> retained;    // directed visibility survivors
    std::vector<std::vector<std::size_t>> neighbors;   // symmetrized, after pruning
    std::size_t base_index = 0;
    std::vector<std::size_t> order;                    // breadth-first order, base first
    std::vector<std::size_t> predecessor;              // walk tree, base -> base
    std::vector<double> distance;                      // geodesic distance from base
};

// Greedy pass over candidates sorted by ascending distance to the center
// row: a candidate is kept iff no already-retained neighbour sees the center
// and the candidate at an obtuse angle. The nearest candidate always stays.
std::vector<std::size_t> visibility_filter(const Matrix& curves, std::size_t center,
                                           const std::vector<std::size_t>& candidates);

RmlGraph build_rml_graph(const Matrix& curves, std::size_t k);

// Coordinates of the base's retained neighbours from a local tangent-plane
// fit; each is rescaled so its norm equals the ambient distance to the base.
struct FirstRing {
    std::vector<std::size_t> ring;   // node ids in retained order
    Matrix coords;                   // ring.size() x d
    Matrix basis;                    // d x T tangent directions
};
FirstRing init_local_coordinates(const RmlGraph& g, const Matrix& curves, std::size_t d);

// Global minimizer of |A u - b|^2 on the sphere |u| = r, by root-solving the
// Lagrangian stationarity condition in the eigenbasis of A^T A; the rank
// deficient ("hard") case adds the missing norm along the smallest
// eigenvector.
std::vector<double> solve_angle_ls(const Matrix& a, const std::vector<double>& b, double r);

struct Embedding {
    Matrix coordinates;            // n x d, zero row at the base
    std::size_t base_index = 0;
    std::size_t d = 0;
    Matrix tangent_basis;          // d x T
    std::size_t neighbor_count = 0;
    std::vector<std::string> warnings;
};

// Radial-and-angle preserving coordinates: the first ring comes from the
// tangent fit, every later node solves the constrained angle problem against
// its predecessor's already-embedded neighbours.
Embedding rml_embed(const Matrix& curves, std::size_t d, std::size_t k);

// Inverse map: express the k nearest training curves in a local principal
// basis and solve the angle problem with the roles of coordinates and curves
// reversed.
std::vector<double> rml_reconstruct(const Matrix& train_y, const Matrix& train_z,
                                    const std::vector<double>& z_new, std::size_t k);

}  // namespace funscreen
