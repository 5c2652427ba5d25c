#include "funscreen/clustering.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/rng.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool rows_equal(const Matrix& y, std::size_t a, std::size_t b) {
    const double* ra = y.row(a);
    const double* rb = y.row(b);
    for (std::size_t t = 0; t < y.cols(); ++t)
        if (ra[t] != rb[t]) return false;
    return true;
}

}  // namespace

KnnGraph build_knn_graph(const Matrix& curves, std::size_t k) {
    const std::size_t n = curves.rows();
    if (n == 0) throw DimensionError("curve matrix is empty");
    if (!curves.all_finite()) throw DomainError("curve matrix contains non-finite values");

    KnnGraph g;
    g.n = n;
    g.representative.resize(n);

    // Collapse identical rows; lexicographic sort makes duplicates adjacent.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double* ra = curves.row(a);
        const double* rb = curves.row(b);
        for (std::size_t t = 0; t < curves.cols(); ++t)
            if (ra[t] != rb[t]) return ra[t] < rb[t];
        return a < b;
    });
    std::vector<std::size_t> group_min;
    for (std::size_t pos = 0; pos < n;) {
        std::size_t end = pos + 1;
        while (end < n && rows_equal(curves, order[pos], order[end])) ++end;
        std::size_t first = order[pos];
        for (std::size_t q = pos; q < end; ++q) first = std::min(first, order[q]);
        const std::size_t id = group_min.size();
        group_min.push_back(first);
        for (std::size_t q = pos; q < end; ++q) g.representative[order[q]] = id;
        pos = end;
    }
    // Renumber so node ids follow first-occurrence row order.
    std::vector<std::size_t> by_row(group_min.size());
    std::iota(by_row.begin(), by_row.end(), 0);
    std::sort(by_row.begin(), by_row.end(),
              [&](std::size_t a, std::size_t b) { return group_min[a] < group_min[b]; });
    std::vector<std::size_t> rename(group_min.size());
    g.node_row.resize(group_min.size());
    for (std::size_t newid = 0; newid < by_row.size(); ++newid) {
        rename[by_row[newid]] = newid;
        g.node_row[newid] = group_min[by_row[newid]];
    }
    for (std::size_t i = 0; i < n; ++i) g.representative[i] = rename[g.representative[i]];

    const std::size_t u = g.nodes();
    g.adjacency.assign(u, {});
    g.lengths.assign(u, {});
    if (k == 0) k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    g.k_used = u >= 2 ? std::min(k, u - 1) : 0;

    if (u >= 2) {
        Matrix d2(u, u);
        parallel_for(u, [&](std::size_t i) {
            for (std::size_t j = 0; j < u; ++j)
                d2(i, j) = kernels::sqdist(curves.row(g.node_row[i]), curves.row(g.node_row[j]),
                                           curves.cols());
        });
        std::vector<std::vector<std::size_t>> directed(u);
        for (std::size_t i = 0; i < u; ++i) {
            std::vector<std::size_t> cand;
            cand.reserve(u - 1);
            for (std::size_t j = 0; j < u; ++j)
                if (j != i) cand.push_back(j);
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(g.k_used),
                              cand.end(), [&](std::size_t a, std::size_t b) {
                                  if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
                                  return a < b;
                              });
            cand.resize(g.k_used);
            directed[i] = std::move(cand);
        }
        for (std::size_t i = 0; i < u; ++i)
            for (std::size_t j : directed[i]) {
                g.adjacency[i].push_back(j);
                g.adjacency[j].push_back(i);
            }
        for (std::size_t i = 0; i < u; ++i) {
            auto& a = g.adjacency[i];
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
            g.lengths[i].reserve(a.size());
            for (std::size_t j : a) g.lengths[i].push_back(std::sqrt(d2(i, j)));
        }
    }

    // Connected components by breadth-first sweep.
    g.component.assign(u, u);
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < u; ++s) {
        if (g.component[s] != u) continue;
        const std::size_t c = g.component_count++;
        stack.push_back(s);
        g.component[s] = c;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t w : g.adjacency[v])
                if (g.component[w] == u) {
                    g.component[w] = c;
                    stack.push_back(w);
                }
        }
    }
    return g;
}

Matrix commute_time_distances(const KnnGraph& g) {
    const std::size_t n = g.n;
    const std::size_t u = g.nodes();
    Matrix out(n, n);
    if (u <= 1) return out;

    double s2 = 0.0;
    std::size_t edges = 0;
    for (std::size_t i = 0; i < u; ++i)
        for (std::size_t e = 0; e < g.adjacency[i].size(); ++e)
            if (g.adjacency[i][e] > i) {
                s2 += g.lengths[i][e] * g.lengths[i][e];
                ++edges;
            }
    if (edges == 0 || s2 <= 0.0) throw DomainError("graph has no usable edges");
    s2 /= static_cast<double>(edges);

    // Similarity weights; the shared scale s2 cancels against the graph
    // volume, so commute times are invariant to rescaling all curves.
    std::vector<std::vector<double>> w(u);
    for (std::size_t i = 0; i < u; ++i) {
        w[i].reserve(g.adjacency[i].size());
        for (double len : g.lengths[i]) w[i].push_back(std::exp(-(len * len) / s2));
    }

    Matrix ct(u, u, kInf);
    for (std::size_t i = 0; i < u; ++i) ct(i, i) = 0.0;

    for (std::size_t c = 0; c < g.component_count; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < u; ++i)
            if (g.component[i] == c) members.push_back(i);
        const std::size_t m = members.size();
        if (m < 2) continue;
        std::vector<std::size_t> local(u, u);
        for (std::size_t a = 0; a < m; ++a) local[members[a]] = a;

        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                    static_cast<Eigen::Index>(m));
        double vol = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t i = members[a];
            double deg = 0.0;
            for (std::size_t e = 0; e < g.adjacency[i].size(); ++e) {
                const std::size_t b = local[g.adjacency[i][e]];
                lap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -w[i][e];
                deg += w[i][e];
            }
            lap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = deg;
            vol += deg;
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
        const auto& vals = es.eigenvalues();
        const auto& vecs = es.eigenvectors();
        const double floor = 1e-12 * vals(static_cast<Eigen::Index>(m) - 1);

        // Diagonal and cross terms of the pseudoinverse, assembled from the
        // retained spectrum only.
        Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                     static_cast<Eigen::Index>(m));
        for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(m); ++q) {
            if (vals(q) <= floor) continue;
            pinv.noalias() += (vecs.col(q) * vecs.col(q).transpose()) / vals(q);
        }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) {
                const auto ia = static_cast<Eigen::Index>(a);
                const auto ib = static_cast<Eigen::Index>(b);
                double v = vol * (pinv(ia, ia) + pinv(ib, ib) - 2.0 * pinv(ia, ib));
                if (v < 0.0) v = 0.0;
                ct(members[a], members[b]) = v;
                ct(members[b], members[a]) = v;
            }
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = i == j ? 0.0 : ct(g.representative[i], g.representative[j]);
    return out;
}

namespace {

void validate_distance_matrix(const Matrix& d) {
    if (d.rows() != d.cols()) throw DimensionError("distance matrix must be square");
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d(i, i) != 0.0) throw DomainError("distance matrix diagonal must be zero");
        for (std::size_t j = i + 1; j < d.cols(); ++j) {
            const double a = d(i, j);
            const double b = d(j, i);
            if (std::isnan(a) || std::isnan(b) || a < 0.0 || b < 0.0)
                throw DomainError("distances must be non-negative");
            if (a != b) throw DomainError("distance matrix is not symmetric");
        }
    }
}

}  // namespace

WardTree ward_linkage(const Matrix& distances) {
    validate_distance_matrix(distances);
    const std::size_t n = distances.rows();
    if (n == 0) throw DimensionError("distance matrix is empty");

    WardTree tree;
    tree.n_leaves = n;
    if (n == 1) return tree;
    tree.merges.reserve(n - 1);

    // Working copy of squared distances; slots are reused as clusters merge.
    Matrix d2(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = distances(i, j);
            d2(i, j) = std::isinf(v) ? kInf : v * v;
        }
    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);

    // Raw merges in chain-discovery order; slots name each cluster by the
    // matrix row it occupies.
    struct RawMerge {
        std::size_t slot_a, slot_b;
        double height;
    };
    std::vector<RawMerge> raw;
    raw.reserve(n - 1);

    std::vector<std::size_t> chain;
    chain.reserve(n);

    for (std::size_t step = 0; step < n - 1; ++step) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                if (active[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        // Grow the chain until two clusters are mutual nearest neighbours.
        // The previous chain element wins ties so the chain cannot cycle,
        // and all-infinite rows (separate graph components) still resolve
        // to the smallest active index.
        for (;;) {
            const std::size_t a = chain.back();
            const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
            std::size_t best = prev;
            double best_d = prev != n ? d2(a, prev) : kInf;
            for (std::size_t c = 0; c < n; ++c) {
                if (!active[c] || c == a || c == prev) continue;
                if (best == n || d2(a, c) < best_d) {
                    best_d = d2(a, c);
                    best = c;
                }
            }
            if (best == prev && prev != n) break;
            chain.push_back(best);
        }
        std::size_t a = chain[chain.size() - 2];
        std::size_t b = chain.back();
        chain.pop_back();
        chain.pop_back();
        if (a > b) std::swap(a, b);

        const double merged_d2 = d2(a, b);
        raw.push_back({a, b, std::isinf(merged_d2) ? kInf : std::sqrt(merged_d2)});

        const double sa = static_cast<double>(size[a]);
        const double sb = static_cast<double>(size[b]);
        for (std::size_t c = 0; c < n; ++c) {
            if (!active[c] || c == a || c == b) continue;
            const double sc = static_cast<double>(size[c]);
            // Distances are finite exactly within a graph component, so a
            // mixed finite/infinite pair cannot occur; the explicit branch
            // avoids inf - inf when whole components merge.
            double v;
            if (std::isinf(d2(a, c)) && std::isinf(d2(b, c)))
                v = kInf;
            else
                v = ((sa + sc) * d2(a, c) + (sb + sc) * d2(b, c) - sc * merged_d2) /
                    (sa + sb + sc);
            d2(a, c) = v;
            d2(c, a) = v;
        }
        size[a] += size[b];
        active[b] = false;
    }

    // Chains find mutual nearest neighbours out of height order; the true
    // agglomeration order is the stable height sort, after which slot pairs
    // are renamed to linkage ids with a union-find pass.
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawMerge& x, const RawMerge& y) { return x.height < y.height; });
    std::vector<std::size_t> parent(n), link_id(n), csize(n, 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::iota(link_id.begin(), link_id.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (std::size_t t = 0; t < raw.size(); ++t) {
        const std::size_t ra = find(raw[t].slot_a);
        const std::size_t rb = find(raw[t].slot_b);
        WardTree::Merge m;
        m.left = std::min(link_id[ra], link_id[rb]);
        m.right = std::max(link_id[ra], link_id[rb]);
        m.height = raw[t].height;
        m.size = csize[ra] + csize[rb];
        tree.merges.push_back(m);
        parent[rb] = ra;
        csize[ra] += csize[rb];
        link_id[ra] = n + t;
    }
    return tree;
}

std::vector<int> WardTree::labels_at(std::size_t k) const {
    const std::size_t n = n_leaves;
    if (k < 1 || k > n) throw DomainError("cluster count must lie in [1, n]");

    std::vector<std::size_t> parent(n + merges.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (std::size_t t = 0; t + k < n; ++t) {
        const std::size_t target = n + t;
        parent[find(merges[t].left)] = target;
        parent[find(merges[t].right)] = target;
    }

    // Clusters are labelled by ascending smallest member.
    std::vector<int> labels(n, -1);
    std::vector<std::size_t> root_label(n + merges.size(), n);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (root_label[r] == n) root_label[r] = static_cast<std::size_t>(next++);
        labels[i] = static_cast<int>(root_label[r]);
    }
    return labels;
}

std::vector<int> ward_cluster(const Matrix& distances, std::size_t k) {
    return ward_linkage(distances).labels_at(k);
}

ClusterResult cluster_curves(const Matrix& curves, std::size_t k, std::size_t knn) {
    const std::size_t n = curves.rows();
    if (n < 2) throw DimensionError("clustering needs at least two curves");
    if (k < 1 || k > n) throw DomainError("cluster count must lie in [1, n]");

    ClusterResult res;
    const KnnGraph g = build_knn_graph(curves, knn);
    res.distances = commute_time_distances(g);
    for (auto& v : res.distances.data()) v = std::sqrt(v);
    res.tree = ward_linkage(res.distances);
    res.labels = res.tree.labels_at(k);
    res.k = k;
    return res;
}

namespace {

// Best agreement between two labelings over all permutations of the K label
// names, found by subset dynamic programming on the confusion matrix.
double best_match_agreement(const std::vector<int>& truth, const std::vector<int>& pred,
                            std::size_t k) {
    const std::size_t m = truth.size();
    std::vector<double> conf(k * k, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        conf[static_cast<std::size_t>(truth[i]) * k + static_cast<std::size_t>(pred[i])] += 1.0;
    const std::size_t full = (std::size_t{1} << k) - 1;
    std::vector<double> dp(full + 1, -1.0);
    dp[0] = 0.0;
    for (std::size_t mask = 0; mask < full; ++mask) {
        if (dp[mask] < 0.0) continue;
        const auto row = static_cast<std::size_t>(__builtin_popcountll(mask));
        for (std::size_t col = 0; col < k; ++col) {
            if (mask & (std::size_t{1} << col)) continue;
            const std::size_t nxt = mask | (std::size_t{1} << col);
            dp[nxt] = std::max(dp[nxt], dp[mask] + conf[row * k + col]);
        }
    }
    return dp[full] / static_cast<double>(m);
}

struct HalfModel {
    Matrix rows;            // curves of this half
    WardTree tree;
    std::size_t components = 0;
};

HalfModel fit_half(const Matrix& curves, const std::vector<int>& idx) {
    HalfModel h;
    h.rows = Matrix(idx.size(), curves.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = curves.row(static_cast<std::size_t>(idx[i]));
        std::copy(src, src + curves.cols(), h.rows.row(i));
    }
    const KnnGraph g = build_knn_graph(h.rows);
    Matrix d = commute_time_distances(g);
    for (auto& v : d.data()) v = std::sqrt(v);
    h.tree = ward_linkage(d);
    h.components = g.component_count;
    return h;
}

// Labels for other-half rows by nearest centroid of the fitted clusters;
// ties resolve to the lowest label.
std::vector<int> transfer_labels(const HalfModel& from, const std::vector<int>& from_labels,
                                 std::size_t k, const Matrix& to_rows) {
    const std::size_t t = from.rows.cols();
    Matrix centroids(k, t);
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < from.rows.rows(); ++i) {
        const auto c = static_cast<std::size_t>(from_labels[i]);
        counts[c] += 1.0;
        const double* src = from.rows.row(i);
        double* dst = centroids.row(c);
        for (std::size_t j = 0; j < t; ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] > 0.0)
            for (std::size_t j = 0; j < t; ++j) centroids(c, j) /= counts[c];

    std::vector<int> out(to_rows.rows(), 0);
    for (std::size_t i = 0; i < to_rows.rows(); ++i) {
        double best = kInf;
        int arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = kernels::sqdist(to_rows.row(i), centroids.row(c), t);
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        out[i] = arg;
    }
    return out;
}

}  // namespace

ClusterCountEstimate estimate_cluster_count(const Matrix& curves, std::size_t k_max,
                                            std::size_t subsamples, std::uint64_t seed) {
    const std::size_t n = curves.rows();
    if (n < 8) throw DimensionError("stability scan needs at least eight curves");
    if (k_max < 2 || k_max > 16) throw DomainError("k_max must lie in [2, 16]");
    if (k_max > n / 2) throw DomainError("k_max exceeds the half-sample size");
    if (subsamples < 1) throw DomainError("subsample count must be >= 1");

    const std::size_t ks = k_max - 1;
    std::vector<double> agree_sum(ks, 0.0);

    for (std::size_t s = 0; s < subsamples; ++s) {
        Rng rng(seed, s + 1);
        const auto perm = rng.permutation(static_cast<int>(n));
        const std::size_t ha = n / 2;
        std::vector<int> ia(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ha));
        std::vector<int> ib(perm.begin() + static_cast<std::ptrdiff_t>(ha), perm.end());

        const HalfModel ma = fit_half(curves, ia);
        const HalfModel mb = fit_half(curves, ib);

        for (std::size_t k = 2; k <= k_max; ++k) {
            // A cut below the graph's component count would split along
            // arbitrary infinite merges; score it as chance agreement.
            if (k < ma.components || k < mb.components) {
                agree_sum[k - 2] += 1.0 / static_cast<double>(k);
                continue;
            }
            const auto la = ma.tree.labels_at(k);
            const auto lb = mb.tree.labels_at(k);
            const auto pred_b = transfer_labels(ma, la, k, mb.rows);
            const auto pred_a = transfer_labels(mb, lb, k, ma.rows);
            const double ab = best_match_agreement(lb, pred_b, k);
            const double ba = best_match_agreement(la, pred_a, k);
            agree_sum[k - 2] += 0.5 * (ab + ba);
        }
    }

    ClusterCountEstimate est;
    est.agreement.resize(ks);
    est.stability.resize(ks);
    for (std::size_t i = 0; i < ks; ++i) {
        const double a = agree_sum[i] / static_cast<double>(subsamples);
        const double kk = static_cast<double>(i + 2);
        est.agreement[i] = a;
        est.stability[i] = 1.0 - (1.0 - a) / (1.0 - 1.0 / kk);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < ks; ++i)
        if (est.stability[i] > est.stability[best]) best = i;
    est.k = best + 2;
    est.no_structure = est.agreement[best] < 1.2 / static_cast<double>(est.k);
    return est;
}

}  // namespace funscreen
