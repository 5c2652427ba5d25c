#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "funscreen/error.hpp"
#include "funscreen/rml.hpp"
#include "funscreen/rng.hpp"
#include "oracles.hpp"

using namespace funscreen;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_dist(const Matrix& m, std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const double diff = m(a, j) - m(b, j);
        s += diff * diff;
    }
    return std::sqrt(s);
}

double objective(const Matrix& a, const std::vector<double>& b, const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) dot += a(i, j) * u[j];
        s += (dot - b[i]) * (dot - b[i]);
    }
    return s;
}

std::vector<double> sphere_point(Rng& rng, std::size_t d, double r) {
    std::vector<double> u(d);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& v : u) {
            v = rng.normal();
            n2 += v * v;
        }
    } while (n2 == 0.0);
    const double scale = r / std::sqrt(n2);
    for (auto& v : u) v *= scale;
    return u;
}

struct Planar {
    Matrix curves;
    Matrix latents;
};

// Points on an affine 2-plane inside R^t; ambient distances equal latent ones.
Planar make_plane(std::size_t n, std::size_t t, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v1(t), v2(t), offset(t);
    double n1 = 0.0;
    for (auto& v : v1) {
        v = rng.normal();
        n1 += v * v;
    }
    for (auto& v : v1) v /= std::sqrt(n1);
    double proj = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < t; ++j) v2[j] = rng.normal();
    for (std::size_t j = 0; j < t; ++j) proj += v1[j] * v2[j];
    for (std::size_t j = 0; j < t; ++j) {
        v2[j] -= proj * v1[j];
        n2 += v2[j] * v2[j];
    }
    for (auto& v : v2) v /= std::sqrt(n2);
    for (auto& v : offset) v = 2.0 * rng.normal();

    Planar out{Matrix(n, t), Matrix(n, 2)};
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 5.0 * rng.uniform();
        const double b = 5.0 * rng.uniform();
        out.latents(i, 0) = a;
        out.latents(i, 1) = b;
        for (std::size_t j = 0; j < t; ++j)
            out.curves(i, j) = offset[j] + a * v1[j] + b * v2[j];
    }
    return out;
}

double spiral_arc(double th) {
    return 0.5 * (th * std::sqrt(1.0 + th * th) + std::asinh(th));
}

double theta_for_arc(double s, double lo, double hi) {
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (spiral_arc(mid) < s)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Spiral sheet r = theta in R^3, isometric to a flat rectangle whose
// coordinates (arc length, height) are kept as ground truth.
Planar make_roll(std::size_t n, std::uint64_t seed) {
    const double th0 = 2.5 * M_PI;
    const double th1 = 5.5 * M_PI;
    const double s0 = spiral_arc(th0);
    const double s1 = spiral_arc(th1);
    Rng rng(seed);
    Planar out{Matrix(n, 3), Matrix(n, 2)};
    for (std::size_t i = 0; i < n; ++i) {
        const double s = s0 + (s1 - s0) * rng.uniform();
        const double h = 6.0 * rng.uniform();
        const double th = theta_for_arc(s, th0, th1);
        out.curves(i, 0) = th * std::cos(th);
        out.curves(i, 1) = th * std::sin(th);
        out.curves(i, 2) = h;
        out.latents(i, 0) = s;
        out.latents(i, 1) = h;
    }
    return out;
}

// Orthogonal alignment residual between two coordinate sets, relative to the
// target's centered norm. Reflections are allowed.
double procrustes_residual(const Matrix& z, const Matrix& target) {
    const auto n = static_cast<Eigen::Index>(z.rows());
    const auto d = static_cast<Eigen::Index>(z.cols());
    Eigen::MatrixXd zc(n, d), tc(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double mz = 0.0, mt = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            mz += z(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            mt += target(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
        mz /= static_cast<double>(n);
        mt /= static_cast<double>(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            zc(i, j) = z(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - mz;
            tc(i, j) = target(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - mt;
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(zc.transpose() * tc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
    return (zc * q - tc).norm() / tc.norm();
}

}  // namespace

TEST_CASE("visibility keeps right angles and drops eclipsed points") {
    SUBCASE("a single candidate always stays") {
        const Matrix m = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}});
        CHECK(visibility_filter(m, 0, {1}) == std::vector<std::size_t>{1});
    }
    SUBCASE("a collinear farther point is hidden") {
        const Matrix m = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}});
        CHECK(visibility_filter(m, 0, {1, 2}) == std::vector<std::size_t>{1});
    }
    SUBCASE("a right angle sits exactly on the boundary and stays") {
        const Matrix m = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
        CHECK(visibility_filter(m, 0, {1, 2}) == std::vector<std::size_t>{1, 2});
    }
    SUBCASE("coincident and unsorted candidates are rejected") {
        const Matrix m = Matrix::from_rows({{0.0, 0.0}, {0.0, 0.0}, {2.0, 0.0}});
        CHECK_THROWS_AS(visibility_filter(m, 0, {1}), DomainError);
        const Matrix m2 = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}});
        CHECK_THROWS_WITH_AS(visibility_filter(m2, 0, {2, 1}),
                             doctest::Contains("ascending"), DomainError);
    }
}

TEST_CASE("a line of five points picks the middle as base") {
    const Matrix m = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
    const RmlGraph g = build_rml_graph(m, 2);

    CHECK(g.n == 5);
    CHECK(g.retained[0] == std::vector<std::size_t>{1});
    CHECK(g.retained[1] == std::vector<std::size_t>{0, 2});
    CHECK(g.retained[4] == std::vector<std::size_t>{3});
    CHECK(g.neighbors[0] == std::vector<std::size_t>{1});
    CHECK(g.neighbors[2] == std::vector<std::size_t>{1, 3});

    CHECK(g.base_index == 2);
    CHECK(g.order == std::vector<std::size_t>{2, 1, 3, 0, 4});
    CHECK(g.predecessor == std::vector<std::size_t>{1, 2, 2, 2, 3});
    const std::vector<double> want{2.0, 1.0, 0.0, 1.0, 2.0};
    for (std::size_t i = 0; i < 5; ++i) CHECK(g.distance[i] == doctest::Approx(want[i]));
}

TEST_CASE("geodesic distances match an all-pairs oracle") {
    Rng rng(2024);
    Matrix m(12, 3);
    for (auto& v : m.data()) v = rng.normal();
    const RmlGraph g = build_rml_graph(m, 4);

    std::vector<std::vector<double>> w(12, std::vector<double>(12, kInf));
    for (std::size_t i = 0; i < 12; ++i) {
        w[i][i] = 0.0;
        for (std::size_t j : g.neighbors[i]) w[i][j] = row_dist(m, i, j);
    }
    const auto fw = oracles::floyd_warshall(w);

    double best_sum = kInf;
    std::size_t best = 12;
    for (std::size_t s = 0; s < 12; ++s) {
        double sum = 0.0;
        for (double v : fw[s]) sum += v;
        if (sum < best_sum) {
            best_sum = sum;
            best = s;
        }
    }
    CHECK(g.base_index == best);
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(g.distance[i] == doctest::Approx(fw[g.base_index][i]).epsilon(1e-12));

    // The walk is breadth-first: hop layers settle in order, and every tree
    // edge is a graph edge.
    std::vector<std::size_t> hops(12, 0);
    for (std::size_t i = 1; i < g.order.size(); ++i) {
        const std::size_t v = g.order[i];
        hops[v] = hops[g.predecessor[v]] + 1;
    }
    for (std::size_t i = 1; i < g.order.size(); ++i)
        CHECK(hops[g.order[i - 1]] <= hops[g.order[i]]);
    for (std::size_t v = 0; v < 12; ++v) {
        if (v == g.base_index) continue;
        const std::size_t p = g.predecessor[v];
        const auto& nb = g.neighbors[v];
        CHECK(std::find(nb.begin(), nb.end(), p) != nb.end());
        CHECK(hops[p] + 1 == hops[v]);
    }
}

TEST_CASE("graph construction validates its input") {
    Matrix tiny(2, 1);
    tiny(1, 0) = 1.0;
    CHECK_THROWS_AS(build_rml_graph(tiny, 2), DimensionError);

    Matrix m(6, 1);
    for (std::size_t i = 0; i < 6; ++i) m(i, 0) = static_cast<double>(i);
    CHECK_THROWS_AS(build_rml_graph(m, 1), ConstructionError);
    CHECK_THROWS_AS(build_rml_graph(m, 6), ConstructionError);

    Matrix bad = m;
    bad(3, 0) = std::nan("");
    CHECK_THROWS_AS(build_rml_graph(bad, 2), DomainError);

    // Two far blobs with k too small to bridge them: the smaller one strands.
    Rng rng(77);
    Matrix split(12, 2);
    for (std::size_t i = 0; i < 12; ++i) {
        const double shift = i < 7 ? 0.0 : 100.0;
        split(i, 0) = shift + rng.uniform();
        split(i, 1) = shift + rng.uniform();
    }
    CHECK_THROWS_WITH_AS(build_rml_graph(split, 2),
                         doctest::Contains("stranded nodes: 7 8 9 10 11"), ConstructionError);
}

TEST_CASE("first ring coordinates preserve radii on a linear patch") {
    const Planar plane = make_plane(40, 6, 51);
    const RmlGraph g = build_rml_graph(plane.curves, 5);
    const FirstRing fr = init_local_coordinates(g, plane.curves, 2);

    REQUIRE(fr.ring == g.retained[g.base_index]);
    REQUIRE(fr.coords.rows() == fr.ring.size());
    CHECK(fr.basis.rows() == 2);
    CHECK(fr.basis.cols() == 6);

    // Tangent directions are orthonormal.
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = a; b < 2; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < 6; ++j) dot += fr.basis(a, j) * fr.basis(b, j);
            CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
        }

    // On exactly planar data the rescale factor is one.
    for (std::size_t i = 0; i < fr.ring.size(); ++i) {
        const double ambient = row_dist(plane.curves, fr.ring[i], g.base_index);
        const double radial = std::sqrt(fr.coords(i, 0) * fr.coords(i, 0) +
                                        fr.coords(i, 1) * fr.coords(i, 1));
        CHECK(std::fabs(radial - ambient) <= 1e-9 * ambient);
    }

    SUBCASE("rank below d is an error") {
        Matrix line(10, 3);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 3; ++j) line(i, j) = static_cast<double>(i) * 0.7;
        const RmlGraph lg = build_rml_graph(line, 2);
        CHECK_THROWS_WITH_AS(init_local_coordinates(lg, line, 2), doctest::Contains("reduce"),
                             RankError);
    }
    SUBCASE("a ring smaller than d is an error") {
        const Matrix path = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
        const RmlGraph pg = build_rml_graph(path, 2);
        CHECK_THROWS_AS(init_local_coordinates(pg, path, 3), DimensionError);
    }
}

TEST_CASE("constrained angle solve") {
    SUBCASE("identity constraints with a feasible target return it") {
        Matrix a(3, 3);
        for (std::size_t i = 0; i < 3; ++i) a(i, i) = 1.0;
        const auto u = solve_angle_ls(a, {0.6, 0.0, 0.8}, 1.0);
        CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-9));
        CHECK(u[1] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(u[2] == doctest::Approx(0.8).epsilon(1e-9));
    }
    SUBCASE("identity constraints project radially") {
        Matrix a(3, 3);
        for (std::size_t i = 0; i < 3; ++i) a(i, i) = 1.0;
        const auto u = solve_angle_ls(a, {3.0, 4.0, 0.0}, 1.0);
        CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-9));
        CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-9));
        CHECK(u[2] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("the rank-deficient case fills the missing direction") {
        Matrix a(2, 3);
        a(0, 0) = 1.0;
        a(1, 1) = 1.0;
        const auto u = solve_angle_ls(a, {0.1, 0.2}, 1.0);
        CHECK(u[0] == doctest::Approx(0.1).epsilon(1e-10));
        CHECK(u[1] == doctest::Approx(0.2).epsilon(1e-10));
        CHECK(u[2] == doctest::Approx(std::sqrt(0.95)).epsilon(1e-10));

        const auto z = solve_angle_ls(a, {0.0, 0.0}, 2.0);
        CHECK(z[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(z[1] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(z[2] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("random instances beat a dense sphere search") {
        Rng rng(4242);
        for (int rep = 0; rep < 3; ++rep) {
            Matrix a(4, 3);
            for (std::size_t i = 0; i < 4; ++i) {
                const auto row = sphere_point(rng, 3, 1.0);
                for (std::size_t j = 0; j < 3; ++j) a(i, j) = row[j];
            }
            std::vector<double> b(4);
            for (auto& v : b) v = 2.0 * rng.normal();
            const auto u = solve_angle_ls(a, b, 1.0);

            double best = kInf;
            Rng probes(1000 + static_cast<std::uint64_t>(rep));
            for (int s = 0; s < 1000000; ++s)
                best = std::min(best, objective(a, b, sphere_point(probes, 3, 1.0)));
            const double got = objective(a, b, u);
            CHECK(got <= best + 1e-10 * (1.0 + best));
            CHECK(std::fabs(got - best) <= 1e-4 * (1.0 + best));
        }
    }
    SUBCASE("solutions satisfy the sphere constraint and stationarity") {
        Rng rng(909);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t d = 2 + rng.below(4);
            const std::size_t q = 1 + rng.below(6);
            const double r = 0.25 + 3.0 * rng.uniform();
            Matrix a(q, d);
            for (std::size_t i = 0; i < q; ++i) {
                const auto row = sphere_point(rng, d, 1.0);
                for (std::size_t j = 0; j < d; ++j) a(i, j) = row[j];
            }
            std::vector<double> b(q);
            for (auto& v : b) v = rng.normal() * r;
            const auto u = solve_angle_ls(a, b, r);

            double norm = 0.0;
            for (double v : u) norm += v * v;
            norm = std::sqrt(norm);
            CHECK(std::fabs(norm - r) <= 1e-10 * r);

            // Multiplier recovered from the solution; the full KKT system
            // must then close to round-off.
            std::vector<double> g(d, 0.0), mu(d, 0.0);
            std::vector<double> au(q, 0.0);
            for (std::size_t i = 0; i < q; ++i)
                for (std::size_t j = 0; j < d; ++j) au[i] += a(i, j) * u[j];
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t i = 0; i < q; ++i) {
                    g[j] += a(i, j) * b[i];
                    mu[j] += a(i, j) * au[i];
                }
            double lambda = 0.0, gnorm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                lambda += (g[j] - mu[j]) * u[j];
                gnorm += g[j] * g[j];
            }
            lambda /= r * r;
            double resid = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                resid += (mu[j] + lambda * u[j] - g[j]) * (mu[j] + lambda * u[j] - g[j]);
            CHECK(std::sqrt(resid) <= 1e-8 * (1.0 + std::sqrt(gnorm)));

            // Global-optimality certificate: A^T A + lambda I must stay PSD.
            std::vector<double> gram(d * d, 0.0);
            for (std::size_t x = 0; x < d; ++x)
                for (std::size_t y = 0; y < d; ++y)
                    for (std::size_t i = 0; i < q; ++i)
                        gram[x * d + y] += a(i, x) * a(i, y);
            const auto eig = oracles::jacobi_eigen(gram, d);
            const double mu_min = *std::min_element(eig.values.begin(), eig.values.end());
            CHECK(lambda >= -mu_min - 1e-8);

            Rng probes(5000 + static_cast<std::uint64_t>(rep));
            const double got = objective(a, b, u);
            for (int s = 0; s < 64; ++s)
                CHECK(got <= objective(a, b, sphere_point(probes, d, r)) + 1e-10);
        }
    }
    SUBCASE("invalid inputs are rejected") {
        Matrix a(1, 2);
        a(0, 0) = 1.0;
        CHECK_THROWS_AS(solve_angle_ls(Matrix(0, 2), {}, 1.0), DomainError);
        CHECK_THROWS_AS(solve_angle_ls(a, {0.5}, 0.0), DomainError);
        CHECK_THROWS_AS(solve_angle_ls(a, {0.5}, -1.0), DomainError);
        CHECK_THROWS_AS(solve_angle_ls(a, {0.5, 0.5}, 1.0), DimensionError);
        Matrix big(1, 2);
        big(0, 0) = 2.0;
        CHECK_THROWS_AS(solve_angle_ls(big, {0.5}, 1.0), DomainError);
    }
}

TEST_CASE("planar clouds embed isometrically") {
    const Planar plane = make_plane(80, 10, 321);
    const RmlGraph g = build_rml_graph(plane.curves, 6);
    const Embedding emb = rml_embed(plane.curves, 2, 6);

    CHECK(emb.base_index == g.base_index);
    CHECK(emb.d == 2);
    CHECK(emb.neighbor_count == 6);
    CHECK(emb.coordinates(emb.base_index, 0) == 0.0);
    CHECK(emb.coordinates(emb.base_index, 1) == 0.0);

    for (std::size_t i : g.retained[g.base_index]) {
        const double ambient = row_dist(plane.curves, i, g.base_index);
        const double radial = std::sqrt(emb.coordinates(i, 0) * emb.coordinates(i, 0) +
                                        emb.coordinates(i, 1) * emb.coordinates(i, 1));
        CHECK(std::fabs(radial - ambient) <= 1e-9 * ambient);
    }
    for (std::size_t v = 0; v < 80; ++v) {
        if (v == g.base_index) continue;
        const std::size_t p = g.predecessor[v];
        double edge = 0.0;
        for (std::size_t x = 0; x < 2; ++x) {
            const double diff = emb.coordinates(v, x) - emb.coordinates(p, x);
            edge += diff * diff;
        }
        const double ambient = row_dist(plane.curves, v, p);
        CHECK(std::fabs(std::sqrt(edge) - ambient) <= 1e-8 * ambient);
    }

    // A flat sheet embeds exactly: base radii match the ambient metric and the
    // whole coordinate set is a rigid image of the generating parameters.
    for (std::size_t v = 0; v < 80; ++v) {
        const double ambient = row_dist(plane.curves, v, g.base_index);
        const double radial = std::sqrt(emb.coordinates(v, 0) * emb.coordinates(v, 0) +
                                        emb.coordinates(v, 1) * emb.coordinates(v, 1));
        CHECK(std::fabs(radial - ambient) <= 1e-6 * std::max(1.0, ambient));
    }
    CHECK(procrustes_residual(emb.coordinates, plane.latents) <= 1e-6);

    // Same call, same bits.
    const Embedding again = rml_embed(plane.curves, 2, 6);
    CHECK(again.coordinates.data() == emb.coordinates.data());
}

TEST_CASE("full-dimensional embedding is a rigid motion") {
    Rng rng(888);
    Matrix m(20, 3);
    for (auto& v : m.data()) v = 3.0 * rng.normal();
    const Embedding emb = rml_embed(m, 3, 19);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = i + 1; j < 20; ++j) {
            const double want = row_dist(m, i, j);
            const double got = row_dist(emb.coordinates, i, j);
            CHECK(std::fabs(got - want) <= 1e-6 * std::max(1.0, want));
        }
}

TEST_CASE("rigid motions of the input leave embedded distances unchanged") {
    Rng rng(555);
    Matrix m(30, 3);
    for (auto& v : m.data()) v = 2.0 * rng.normal();

    const auto w = sphere_point(rng, 3, 1.0);
    Matrix moved(30, 3);
    for (std::size_t i = 0; i < 30; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < 3; ++j) dot += w[j] * m(i, j);
        for (std::size_t j = 0; j < 3; ++j)
            moved(i, j) = m(i, j) - 2.0 * dot * w[j] + 4.5 * static_cast<double>(j + 1);
    }

    const Embedding a = rml_embed(m, 2, 6);
    const Embedding b = rml_embed(moved, 2, 6);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = i + 1; j < 30; ++j) {
            const double da = row_dist(a.coordinates, i, j);
            const double db = row_dist(b.coordinates, i, j);
            CHECK(std::fabs(da - db) <= 1e-8 * std::max(1.0, da));
        }
}

TEST_CASE("a spiral sheet unrolls with small radial error") {
    const Planar roll = make_roll(400, 97);
    const Embedding emb = rml_embed(roll.curves, 2, 10);

    std::vector<double> rel;
    for (std::size_t v = 0; v < 400; ++v) {
        if (v == emb.base_index) continue;
        const double geo = row_dist(roll.latents, v, emb.base_index);
        const double radial = std::sqrt(emb.coordinates(v, 0) * emb.coordinates(v, 0) +
                                        emb.coordinates(v, 1) * emb.coordinates(v, 1));
        rel.push_back(std::fabs(radial - geo) / geo);
    }
    std::sort(rel.begin(), rel.end());
    CHECK(rel[rel.size() / 2] <= 0.05);
}

TEST_CASE("reconstruction inverts the embedding") {
    const Planar plane = make_plane(80, 10, 321);
    const Embedding emb = rml_embed(plane.curves, 2, 6);

    SUBCASE("a training coordinate returns its own curve") {
        for (std::size_t i : {0ul, 17ul, 55ul}) {
            const auto rec = rml_reconstruct(plane.curves, emb.coordinates,
                                             emb.coordinates.row_copy(i), 8);
            for (std::size_t j = 0; j < 10; ++j) CHECK(rec[j] == plane.curves(i, j));
        }
    }
    SUBCASE("midpoints on flat data reproduce the averaged curve") {
        for (std::size_t i : {3ul, 29ul, 64ul}) {
            // Pair each probe with its nearest distinct training point.
            std::size_t j = i == 0 ? 1 : 0;
            for (std::size_t c = 0; c < 80; ++c)
                if (c != i && row_dist(emb.coordinates, i, c) < row_dist(emb.coordinates, i, j))
                    j = c;
            std::vector<double> mid(2);
            for (std::size_t x = 0; x < 2; ++x)
                mid[x] = 0.5 * (emb.coordinates(i, x) + emb.coordinates(j, x));
            const auto rec = rml_reconstruct(plane.curves, emb.coordinates, mid, 8);
            double err = 0.0, norm = 0.0;
            for (std::size_t x = 0; x < 10; ++x) {
                const double want = 0.5 * (plane.curves(i, x) + plane.curves(j, x));
                err += (rec[x] - want) * (rec[x] - want);
                norm += want * want;
            }
            CHECK(std::sqrt(err) <= 1e-6 * std::sqrt(norm));
        }
    }
    SUBCASE("bad arguments are rejected") {
        const std::vector<double> z{0.0, 0.0};
        CHECK_THROWS_AS(rml_reconstruct(plane.curves, emb.coordinates, z, 2), RankError);
        CHECK_THROWS_AS(rml_reconstruct(plane.curves, emb.coordinates, z, 81), DimensionError);
        CHECK_THROWS_AS(rml_reconstruct(plane.curves, emb.coordinates, {0.0}, 8),
                        DimensionError);
        CHECK_THROWS_AS(rml_reconstruct(plane.curves, emb.coordinates, {0.0, std::nan("")}, 8),
                        DomainError);
    }
}

TEST_CASE("spiral round trips stay within a few percent") {
    const Planar roll = make_roll(400, 97);
    const Embedding emb = rml_embed(roll.curves, 2, 10);

    // Leave-one-out: rebuild each held-out curve from its neighbors only.
    std::vector<double> rel;
    for (std::size_t i = 0; i < 400; i += 7) {
        Matrix ty(399, 3), tz(399, 2);
        std::size_t w = 0;
        for (std::size_t r = 0; r < 400; ++r) {
            if (r == i) continue;
            for (std::size_t c = 0; c < 3; ++c) ty(w, c) = roll.curves(r, c);
            for (std::size_t c = 0; c < 2; ++c) tz(w, c) = emb.coordinates(r, c);
            ++w;
        }
        const auto rec = rml_reconstruct(ty, tz, emb.coordinates.row_copy(i), 10);
        double err = 0.0, norm = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            err += (rec[c] - roll.curves(i, c)) * (rec[c] - roll.curves(i, c));
            norm += roll.curves(i, c) * roll.curves(i, c);
        }
        rel.push_back(std::sqrt(err / norm));
    }
    std::sort(rel.begin(), rel.end());
    CHECK(rel[rel.size() / 2] <= 0.05);
}
