#include "funscreen/rml.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "funscreen/ensemble.hpp"
#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/pca.hpp"

namespace funscreen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_distance(const Matrix& y, std::size_t a, std::size_t b) {
    return std::sqrt(kernels::sqdist(y.row(a), y.row(b), y.cols()));
}

}  // namespace

std::vector<std::size_t> visibility_filter(const Matrix& curves, std::size_t center,
                                           const std::vector<std::size_t>& candidates) {
    const std::size_t t = curves.cols();
    std::vector<std::size_t> retained;
    double prev = 0.0;
    for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
        const std::size_t cand = candidates[pos];
        const double dist = row_distance(curves, center, cand);
        if (dist == 0.0)
            throw DomainError("candidate " + std::to_string(cand) +
                              " coincides with the center point");
        if (dist < prev) throw DomainError("candidates must be sorted by ascending distance");
        prev = dist;

        bool visible = true;
        for (std::size_t kept : retained) {
            // Angle at the retained point between center and candidate;
            // obtuse means the candidate hides behind it.
            double dot = 0.0;
            for (std::size_t j = 0; j < t; ++j)
                dot += (curves(center, j) - curves(kept, j)) * (curves(cand, j) - curves(kept, j));
            if (dot < 0.0) {
                visible = false;
                break;
            }
        }
        if (visible) retained.push_back(cand);
    }
    return retained;
}

namespace {

struct EdgeKey {
    std::size_t a, b;
    bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
    bool operator==(const EdgeKey& o) const { return a == o.a && b == o.b; }
};

std::vector<std::size_t> component_of(std::size_t n,
                                      const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<std::size_t> comp(n, n);
    std::vector<std::size_t> stack;
    std::size_t count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != n) continue;
        comp[s] = count;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t w : adj[v])
                if (comp[w] == n) {
                    comp[w] = count;
                    stack.push_back(w);
                }
        }
        ++count;
    }
    return comp;
}

struct Dijkstra {
    std::vector<double> dist;
    std::vector<std::size_t> pred;
    std::vector<std::size_t> order;
};

Dijkstra shortest_paths(std::size_t n, const std::vector<std::vector<std::size_t>>& adj,
                        const std::vector<std::vector<double>>& len, std::size_t src) {
    Dijkstra d;
    d.dist.assign(n, kInf);
    d.pred.assign(n, src);
    d.order.reserve(n);
    std::vector<bool> settled(n, false);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    d.dist[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
        const auto [dv, v] = heap.top();
        heap.pop();
        if (settled[v]) continue;
        settled[v] = true;
        d.order.push_back(v);
        for (std::size_t e = 0; e < adj[v].size(); ++e) {
            const std::size_t w = adj[v][e];
            const double cand = dv + len[v][e];
            if (cand < d.dist[w]) {
                d.dist[w] = cand;
                d.pred[w] = v;
                heap.push({cand, w});
            }
        }
    }
    return d;
}

}  // namespace

RmlGraph build_rml_graph(const Matrix& curves, std::size_t k) {
    const std::size_t n = curves.rows();
    if (n < 3) throw DimensionError("graph needs at least three curves");
    if (k < 2 || k >= n)
        throw ConstructionError("neighbor count must satisfy 2 <= k < n, got k = " +
                                std::to_string(k));
    if (!curves.all_finite()) throw DomainError("curve matrix contains non-finite values");

    RmlGraph g;
    g.n = n;
    g.k_used = k;
    g.retained.assign(n, {});

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> cand;
        cand.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cand.push_back(j);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double da = kernels::sqdist(curves.row(i), curves.row(a),
                                                                curves.cols());
                              const double db = kernels::sqdist(curves.row(i), curves.row(b),
                                                                curves.cols());
                              if (da != db) return da < db;
                              return a < b;
                          });
        cand.resize(k);
        g.retained[i] = visibility_filter(curves, i, cand);
    }

    // Undirected edge pool from the directed survivors.
    std::vector<EdgeKey> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : g.retained[i])
            edges.push_back({std::min(i, j), std::max(i, j)});
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<double> elen(edges.size());
    double mean = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        elen[e] = row_distance(curves, edges[e].a, edges[e].b);
        mean += elen[e];
    }
    mean /= static_cast<double>(edges.size());
    double var = 0.0;
    for (double l : elen) var += (l - mean) * (l - mean);
    const double cutoff = mean + 2.0 * std::sqrt(var / static_cast<double>(edges.size()));

    // Drop outlier edges longest-first, but never break connectivity.
    std::vector<std::size_t> over;
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (elen[e] > cutoff) over.push_back(e);
    std::sort(over.begin(), over.end(),
              [&](std::size_t a, std::size_t b) { return elen[a] > elen[b]; });
    std::vector<bool> alive(edges.size(), true);
    auto connected_without = [&](std::size_t skip) {
        std::vector<std::vector<std::size_t>> adj(n);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (!alive[e] || e == skip) continue;
            adj[edges[e].a].push_back(edges[e].b);
            adj[edges[e].b].push_back(edges[e].a);
        }
        const auto comp = component_of(n, adj);
        return comp[edges[skip].a] == comp[edges[skip].b];
    };
    for (std::size_t e : over)
        if (connected_without(e)) alive[e] = false;

    g.neighbors.assign(n, {});
    std::vector<std::vector<double>> nlen(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!alive[e]) continue;
        g.neighbors[edges[e].a].push_back(edges[e].b);
        nlen[edges[e].a].push_back(elen[e]);
        g.neighbors[edges[e].b].push_back(edges[e].a);
        nlen[edges[e].b].push_back(elen[e]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& keep = g.retained[i];
        keep.erase(std::remove_if(keep.begin(), keep.end(),
                                  [&](std::size_t j) {
                                      const EdgeKey key{std::min(i, j), std::max(i, j)};
                                      const auto it = std::lower_bound(edges.begin(), edges.end(),
                                                                       key);
                                      return !alive[static_cast<std::size_t>(it - edges.begin())];
                                  }),
                   keep.end());
    }

    const auto comp = component_of(n, g.neighbors);
    const std::size_t comp_count = 1 + *std::max_element(comp.begin(), comp.end());
    if (comp_count > 1) {
        std::vector<std::size_t> sizes(comp_count, 0);
        for (std::size_t c : comp) ++sizes[c];
        const std::size_t main_comp = static_cast<std::size_t>(
            std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        std::string msg = "graph is disconnected; stranded nodes:";
        std::size_t listed = 0, total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (comp[i] == main_comp) continue;
            ++total;
            if (listed < 8) {
                msg += " " + std::to_string(i);
                ++listed;
            }
        }
        if (total > listed) msg += " (+" + std::to_string(total - listed) + " more)";
        throw ConstructionError(msg);
    }

    // Base point: smallest total geodesic distance, ties to the lowest index.
    double best_sum = kInf;
    for (std::size_t s = 0; s < n; ++s) {
        const auto d = shortest_paths(n, g.neighbors, nlen, s);
        double sum = 0.0;
        for (double v : d.dist) sum += v;
        if (sum < best_sum) {
            best_sum = sum;
            g.base_index = s;
        }
    }
    g.distance = shortest_paths(n, g.neighbors, nlen, g.base_index).dist;

    // Settle order is a breadth-first walk: a whole hop layer embeds before
    // the next one starts, so every node beyond the first ring sees several
    // anchored references, not just its parent's own predecessor.
    g.order.reserve(n);
    g.predecessor.assign(n, g.base_index);
    std::vector<bool> seen(n, false);
    seen[g.base_index] = true;
    g.order.push_back(g.base_index);
    for (std::size_t head = 0; head < g.order.size(); ++head) {
        const std::size_t v = g.order[head];
        for (std::size_t w : g.neighbors[v]) {
            if (seen[w]) continue;
            seen[w] = true;
            g.predecessor[w] = v;
            g.order.push_back(w);
        }
    }
    return g;
}

FirstRing init_local_coordinates(const RmlGraph& g, const Matrix& curves, std::size_t d) {
    if (d < 1) throw DomainError("embedding dimension must be >= 1");
    const auto& ring = g.retained[g.base_index];
    if (ring.size() < d)
        throw DimensionError("base neighborhood has " + std::to_string(ring.size()) +
                             " nodes, need at least d = " + std::to_string(d));

    const std::size_t t = curves.cols();
    Matrix local(ring.size() + 1, t);
    std::copy(curves.row(g.base_index), curves.row(g.base_index) + t, local.row(0));
    for (std::size_t i = 0; i < ring.size(); ++i)
        std::copy(curves.row(ring[i]), curves.row(ring[i]) + t, local.row(i + 1));

    const auto p = pca_decompose(center_and_inertia(local));
    if (p.rank() < d)
        throw RankError("base neighborhood has rank " + std::to_string(p.rank()) +
                        " < d = " + std::to_string(d) + "; reduce the embedding dimension");

    FirstRing fr;
    fr.ring = ring;
    fr.basis = Matrix(d, t);
    for (std::size_t q = 0; q < d; ++q)
        std::copy(p.components.row(q), p.components.row(q) + t, fr.basis.row(q));

    fr.coords = Matrix(ring.size(), d);
    std::vector<double> diff(t);
    for (std::size_t i = 0; i < ring.size(); ++i) {
        for (std::size_t j = 0; j < t; ++j)
            diff[j] = curves(ring[i], j) - curves(g.base_index, j);
        double norm_z = 0.0;
        for (std::size_t q = 0; q < d; ++q) {
            const double z = kernels::dot(fr.basis.row(q), diff.data(), t);
            fr.coords(i, q) = z;
            norm_z += z * z;
        }
        norm_z = std::sqrt(norm_z);
        const double norm_y = std::sqrt(kernels::sumsq(diff.data(), t));
        if (norm_z <= 0.0)
            throw DomainError("neighbor " + std::to_string(ring[i]) +
                              " is orthogonal to the tangent basis");
        const double scale = norm_y / norm_z;
        for (std::size_t q = 0; q < d; ++q) fr.coords(i, q) *= scale;
    }
    return fr;
}

std::vector<double> solve_angle_ls(const Matrix& a, const std::vector<double>& b, double r) {
    const std::size_t q = a.rows();
    const std::size_t d = a.cols();
    if (q == 0) throw DomainError("no constraints: caller must fall back");
    if (b.size() != q)
        throw DimensionError("constraint vector has " + std::to_string(b.size()) +
                             " entries, expected " + std::to_string(q));
    if (!(r > 0.0)) throw DomainError("sphere radius must be positive");
    for (std::size_t i = 0; i < q; ++i) {
        const double nrm = kernels::sumsq(a.row(i), d);
        if (std::fabs(nrm - 1.0) > 1e-8)
            throw DomainError("constraint rows must be unit vectors");
    }

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < q; ++i) {
        const double* row = a.row(i);
        for (std::size_t x = 0; x < d; ++x) {
            g(static_cast<Eigen::Index>(x)) += row[x] * b[i];
            for (std::size_t y = 0; y < d; ++y)
                m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += row[x] * row[y];
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd mu = es.eigenvalues();
    const Eigen::MatrixXd v = es.eigenvectors();
    const Eigen::VectorXd c = v.transpose() * g;
    const auto dd = static_cast<Eigen::Index>(d);
    const double mu_min = mu(0);
    const double mu_max = mu(dd - 1);
    const double eig_tol = 1e-12 * std::max(1.0, std::fabs(mu_max));

    // Split the spectrum at the smallest eigenvalue; the limit solution as
    // lambda approaches -mu_min uses only the complement.
    double c_min_sq = 0.0;
    double limit_sq = 0.0;
    for (Eigen::Index i = 0; i < dd; ++i) {
        if (mu(i) - mu_min <= eig_tol)
            c_min_sq += c(i) * c(i);
        else
            limit_sq += (c(i) / (mu(i) - mu_min)) * (c(i) / (mu(i) - mu_min));
    }
    const double g_norm = g.norm();

    Eigen::VectorXd u(dd);
    if (c_min_sq <= 1e-24 * std::max(1.0, g_norm * g_norm) && limit_sq <= r * r) {
        // Hard case: the gradient has no component along the smallest
        // eigenspace, so the sphere is reached by adding one.
        for (Eigen::Index i = 0; i < dd; ++i)
            u(i) = mu(i) - mu_min <= eig_tol ? 0.0 : c(i) / (mu(i) - mu_min);
        const double tau = std::sqrt(std::max(0.0, r * r - limit_sq));
        Eigen::VectorXd dir = v.col(0);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < dd; ++i)
            if (std::fabs(dir(i)) > std::fabs(dir(arg))) arg = i;
        if (dir(arg) < 0.0) dir = -dir;
        u = v * u + tau * dir;
    } else {
        // phi(t) = |u(-mu_min + t)|^2 decreases monotonically in t > 0;
        // bracket a root of phi = r^2 and bisect.
        auto phi = [&](double t) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < dd; ++i) {
                const double den = (mu(i) - mu_min) + t;
                s += (c(i) / den) * (c(i) / den);
            }
            return s;
        };
        double t_lo = std::sqrt(c_min_sq) / (2.0 * r);
        if (t_lo <= 0.0 || phi(t_lo) < r * r) {
            t_lo = std::max(1e-300, 1e-18 * std::max(1.0, std::fabs(mu_max)));
            while (phi(t_lo) < r * r && t_lo > 1e-290) t_lo *= 1e-3;
        }
        double t_hi = std::max(2.0 * g_norm / r, 2.0 * t_lo);
        while (phi(t_hi) > r * r) t_hi *= 2.0;
        for (int it = 0; it < 200 && (t_hi - t_lo) > 1e-12 * t_hi; ++it) {
            const double mid = 0.5 * (t_lo + t_hi);
            if (phi(mid) > r * r)
                t_lo = mid;
            else
                t_hi = mid;
        }
        const double t = 0.5 * (t_lo + t_hi);
        for (Eigen::Index i = 0; i < dd; ++i) u(i) = c(i) / ((mu(i) - mu_min) + t);
        u = v * u;
    }

    // Land exactly on the sphere; the stationarity residual stays within the
    // bisection tolerance.
    const double un = u.norm();
    if (un > 0.0) u *= r / un;
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = u(static_cast<Eigen::Index>(i));
    return out;
}

namespace {

// Reference directions spread well when every Gram eigenvalue stays above a
// fixed fraction of the largest; thin bundles leave the orthogonal component
// of the solve poorly determined. The weakest direction is reported so a
// caller can examine the mirrored alternative.
struct SpreadInfo {
    bool well_spread = false;
    std::vector<double> weak;
};

SpreadInfo direction_spread(const std::vector<std::vector<double>>& rows, std::size_t d) {
    SpreadInfo info;
    info.weak.assign(d, 0.0);
    if (rows.empty()) return info;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                 static_cast<Eigen::Index>(d));
    for (const auto& row : rows)
        for (std::size_t x = 0; x < d; ++x)
            for (std::size_t y = 0; y < d; ++y)
                gram(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) +=
                    row[x] * row[y];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double top = es.eigenvalues()(static_cast<Eigen::Index>(d) - 1);
    info.well_spread = rows.size() >= d && es.eigenvalues()(0) > 1e-2 * top;
    for (std::size_t x = 0; x < d; ++x) info.weak[x] = es.eigenvectors()(static_cast<Eigen::Index>(x), 0);
    return info;
}

}  // namespace

Embedding rml_embed(const Matrix& curves, std::size_t d, std::size_t k) {
    const std::size_t n = curves.rows();
    const std::size_t t = curves.cols();
    if (d < 1 || d > t) throw DomainError("embedding dimension must lie in [1, T]");

    const RmlGraph g = build_rml_graph(curves, k);
    const FirstRing fr = init_local_coordinates(g, curves, d);

    Embedding emb;
    emb.coordinates = Matrix(n, d);
    emb.base_index = g.base_index;
    emb.d = d;
    emb.tangent_basis = fr.basis;
    emb.neighbor_count = k;

    std::vector<bool> embedded(n, false);
    embedded[g.base_index] = true;
    for (std::size_t i = 0; i < fr.ring.size(); ++i) {
        const std::size_t node = fr.ring[i];
        std::copy(fr.coords.row(i), fr.coords.row(i) + d, emb.coordinates.row(node));
        embedded[node] = true;
    }

    std::vector<double> zdir(d), row(d), bvec;
    for (std::size_t v : g.order) {
        if (embedded[v]) continue;
        const std::size_t p = g.predecessor[v];
        const double r = row_distance(curves, v, p);
        if (r == 0.0) {
            std::copy(emb.coordinates.row(p), emb.coordinates.row(p) + d,
                      emb.coordinates.row(v));
            emb.warnings.push_back("node " + std::to_string(v) +
                                   " duplicates its predecessor; coordinates copied");
            embedded[v] = true;
            continue;
        }

        std::vector<std::vector<double>> rows;
        bvec.clear();
        std::vector<std::size_t> used;
        auto add_reference = [&](std::size_t u) {
            if (u == v || u == p || !embedded[u]) return;
            if (std::find(used.begin(), used.end(), u) != used.end()) return;
            double nz = 0.0;
            for (std::size_t x = 0; x < d; ++x) {
                zdir[x] = emb.coordinates(u, x) - emb.coordinates(p, x);
                nz += zdir[x] * zdir[x];
            }
            nz = std::sqrt(nz);
            const double ny = row_distance(curves, u, p);
            if (nz <= 0.0 || ny <= 0.0) return;
            for (std::size_t x = 0; x < d; ++x) zdir[x] /= nz;
            rows.push_back(zdir);
            double dot = 0.0;
            for (std::size_t j = 0; j < t; ++j)
                dot += (curves(v, j) - curves(p, j)) * (curves(u, j) - curves(p, j));
            bvec.push_back(dot / ny);
            used.push_back(u);
        };
        for (std::size_t u : g.neighbors[p]) add_reference(u);

        // Thin or deficient direction sets leave part of the solution nearly
        // unconstrained and can reflect a whole subtree; the node's own
        // embedded neighbors supply the same kind of angle constraint and pin
        // it down.
        SpreadInfo spread = direction_spread(rows, d);
        if (!spread.well_spread) {
            for (std::size_t u : g.neighbors[v]) add_reference(u);
            spread = direction_spread(rows, d);
        }

        if (rows.empty()) {
            // No embedded reference directions: continue along the ray the
            // predecessor itself arrived on.
            const std::size_t pp = g.predecessor[p];
            double nrm = 0.0;
            for (std::size_t x = 0; x < d; ++x) {
                zdir[x] = emb.coordinates(p, x) - emb.coordinates(pp, x);
                nrm += zdir[x] * zdir[x];
            }
            nrm = std::sqrt(nrm);
            if (nrm <= 0.0) {
                std::fill(zdir.begin(), zdir.end(), 0.0);
                zdir[0] = 1.0;
                nrm = 1.0;
            }
            for (std::size_t x = 0; x < d; ++x)
                emb.coordinates(v, x) = emb.coordinates(p, x) + r * zdir[x] / nrm;
            emb.warnings.push_back("node " + std::to_string(v) +
                                   " placed on its predecessor's ray: no embedded neighbors");
            embedded[v] = true;
            continue;
        }

        Matrix a(rows.size(), d);
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(rows[i].begin(), rows[i].end(), a.row(i));
        auto u = solve_angle_ls(a, bvec, r);

        // An underdetermined solve leaves a free component whose sign the
        // optimizer cannot see. Both signs satisfy the angle constraints, but
        // ambient distances to nearby embedded nodes tell them apart.
        if (!spread.well_spread) {
            double along = 0.0;
            for (std::size_t x = 0; x < d; ++x) along += u[x] * spread.weak[x];
            if (along != 0.0) {
                std::vector<double> alt = u;
                for (std::size_t x = 0; x < d; ++x) alt[x] -= 2.0 * along * spread.weak[x];

                std::vector<std::size_t> anchors;
                auto collect = [&](std::size_t w) {
                    if (w != v && w != p && embedded[w]) anchors.push_back(w);
                };
                for (std::size_t w : g.neighbors[p]) {
                    collect(w);
                    for (std::size_t w2 : g.neighbors[w]) collect(w2);
                }
                for (std::size_t w : g.neighbors[v]) collect(w);
                std::sort(anchors.begin(), anchors.end());
                anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

                auto score = [&](const std::vector<double>& cand) {
                    double s = 0.0;
                    for (std::size_t w : anchors) {
                        double dz = 0.0;
                        for (std::size_t x = 0; x < d; ++x) {
                            const double diff =
                                emb.coordinates(p, x) + cand[x] - emb.coordinates(w, x);
                            dz += diff * diff;
                        }
                        const double gap = std::sqrt(dz) - row_distance(curves, v, w);
                        s += gap * gap;
                    }
                    return s;
                };
                if (score(alt) < score(u)) u = alt;
            }
        }

        for (std::size_t x = 0; x < d; ++x)
            emb.coordinates(v, x) = emb.coordinates(p, x) + u[x];
        embedded[v] = true;
    }
    return emb;
}

std::vector<double> rml_reconstruct(const Matrix& train_y, const Matrix& train_z,
                                    const std::vector<double>& z_new, std::size_t k) {
    const std::size_t n = train_y.rows();
    const std::size_t t = train_y.cols();
    const std::size_t d = train_z.cols();
    if (train_z.rows() != n) throw DimensionError("coordinate and curve row counts differ");
    if (z_new.size() != d)
        throw DimensionError("query has " + std::to_string(z_new.size()) +
                             " coordinates, expected " + std::to_string(d));
    if (k > n) throw DimensionError("k exceeds the training size");
    if (k < d + 1)
        throw RankError("reconstruction needs k >= d+1 = " + std::to_string(d + 1) +
                        " neighbors, got " + std::to_string(k));
    for (double z : z_new)
        if (!std::isfinite(z)) throw DomainError("query coordinates must be finite");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> dist(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t x = 0; x < d; ++x) {
            const double diff = train_z(i, x) - z_new[x];
            s += diff * diff;
        }
        dist[i] = std::sqrt(s);
    }
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                      });
    idx.resize(k);

    const std::size_t p = idx[0];
    const double r = dist[p];
    if (r == 0.0) {
        std::vector<double> out(t);
        std::copy(train_y.row(p), train_y.row(p) + t, out.begin());
        return out;
    }

    Matrix local(k, t);
    for (std::size_t i = 0; i < k; ++i)
        std::copy(train_y.row(idx[i]), train_y.row(idx[i]) + t, local.row(i));
    const auto pca = pca_decompose(center_and_inertia(local));
    const std::size_t d_loc = std::min(d, pca.rank());
    if (d_loc == 0) {
        // All neighbor curves identical: nothing to vary.
        std::vector<double> out = pca.column_means;
        return out;
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> bvec;
    std::vector<double> sdir(d_loc);
    for (std::size_t j = 1; j < k; ++j) {
        double ns = 0.0;
        for (std::size_t x = 0; x < d_loc; ++x) {
            sdir[x] = pca.scores(j, x) - pca.scores(0, x);
            ns += sdir[x] * sdir[x];
        }
        ns = std::sqrt(ns);
        double nz = 0.0;
        for (std::size_t x = 0; x < d; ++x) {
            const double diff = train_z(idx[j], x) - train_z(p, x);
            nz += diff * diff;
        }
        nz = std::sqrt(nz);
        if (ns <= 0.0 || nz <= 0.0) continue;
        for (std::size_t x = 0; x < d_loc; ++x) sdir[x] /= ns;
        rows.push_back(sdir);
        double dot = 0.0;
        for (std::size_t x = 0; x < d; ++x)
            dot += (z_new[x] - train_z(p, x)) * (train_z(idx[j], x) - train_z(p, x));
        bvec.push_back(dot / nz);
    }

    std::vector<double> scores(d_loc);
    for (std::size_t x = 0; x < d_loc; ++x) scores[x] = pca.scores(0, x);
    if (!rows.empty()) {
        Matrix a(rows.size(), d_loc);
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(rows[i].begin(), rows[i].end(), a.row(i));
        const auto u = solve_angle_ls(a, bvec, r);
        for (std::size_t x = 0; x < d_loc; ++x) scores[x] += u[x];
    }

    std::vector<double> out = pca.column_means;
    for (std::size_t x = 0; x < d_loc; ++x)
        kernels::axpy(scores[x], pca.components.row(x), out.data(), t);
    return out;
}

}  // namespace funscreen
