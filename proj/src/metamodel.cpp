#include "funscreen/metamodel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "funscreen/clustering.hpp"
#include "funscreen/ensemble.hpp"
#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/rml.hpp"
#include "funscreen/rng.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

void check_point(const std::vector<double>& x, std::size_t p) {
    if (x.size() != p)
        throw DimensionError("query has " + std::to_string(x.size()) + " coordinates, expected " +
                             std::to_string(p));
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("query contains a non-finite value");
}

// k nearest rows to x, ascending (squared distance, index); `skip` excludes
// one training row.
std::vector<std::pair<double, std::size_t>> nearest_rows(const Matrix& m, const double* x,
                                                         std::size_t k, std::size_t skip = kNone) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i == skip) continue;
        d.emplace_back(kernels::sqdist(x, m.row(i), m.cols()), i);
    }
    if (k > d.size()) k = d.size();
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    d.resize(k);
    return d;
}

// Local width at training row j from its own neighbours; `skip` mimics a
// leave-one-out training set.
double sigma_at(const Matrix& train_x, std::size_t j, std::size_t k, std::size_t skip = kNone) {
    std::vector<double> d2;
    d2.reserve(train_x.rows());
    for (std::size_t i = 0; i < train_x.rows(); ++i) {
        if (i == j || i == skip) continue;
        d2.push_back(kernels::sqdist(train_x.row(j), train_x.row(i), train_x.cols()));
    }
    if (k > d2.size()) k = d2.size();
    std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k), d2.end());
    std::vector<double> d(k);
    for (std::size_t i = 0; i < k; ++i) d[i] = std::sqrt(d2[i]);
    return local_sigma(d);
}

// Weighted mean of the rows listed in `nb`; the shift by the largest
// exponent keeps the normalizer away from zero without changing the weights.
std::vector<double> weighted_mean(const Matrix& train_x, const Matrix& train_y,
                                  const std::vector<std::pair<double, std::size_t>>& nb,
                                  std::size_t k_sigma, std::size_t skip = kNone) {
    std::vector<double> e(nb.size());
    for (std::size_t j = 0; j < nb.size(); ++j) {
        const double s = sigma_at(train_x, nb[j].second, k_sigma, skip);
        e[j] = -nb[j].first / (s * s);
    }
    const double shift = *std::max_element(e.begin(), e.end());
    std::vector<double> out(train_y.cols(), 0.0);
    double norm = 0.0;
    for (std::size_t j = 0; j < nb.size(); ++j) {
        const double w = std::exp(e[j] - shift);
        norm += w;
        kernels::axpy(w, train_y.row(nb[j].second), out.data(), out.size());
    }
    for (double& v : out) v /= norm;
    return out;
}

// ---- local-linear smoother ----

struct SmoothPoint {
    double value = 0.0;
    double slope = 0.0;
    double self_weight = 0.0;   // hat-matrix diagonal when evaluated at a data point
};

SmoothPoint smooth_one(const std::vector<double>& u, const std::vector<double>& r, double h,
                       double at) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double z = (u[j] - at) / h;
        const double w = std::exp(-0.5 * z * z);
        const double du = u[j] - at;
        s0 += w;
        s1 += w * du;
        s2 += w * du * du;
        t0 += w * r[j];
        t1 += w * r[j] * du;
    }
    SmoothPoint out;
    const double denom = s0 * s2 - s1 * s1;
    if (denom > 1e-12 * s0 * s2 && s2 > 0.0) {
        out.value = (s2 * t0 - s1 * t1) / denom;
        out.slope = (s0 * t1 - s1 * t0) / denom;
        out.self_weight = s2 / denom;
    } else if (s0 > 0.0) {
        out.value = t0 / s0;
        out.slope = 0.0;
        out.self_weight = 1.0 / s0;
    }
    return out;
}

double projection_range(const std::vector<double>& u) {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    return *hi - *lo;
}

// Rule-of-thumb width used while the direction is still moving.
double rot_bandwidth(const std::vector<double>& u) {
    const std::size_t m = u.size();
    double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double v : u) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(m));
    return std::max(1.06 * sd * std::pow(static_cast<double>(m), -0.2),
                    1e-3 * projection_range(u));
}

// Residual sum of squares of the smoother at the training points.
double smooth_rss(const std::vector<double>& u, const std::vector<double>& r, double h) {
    double rss = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = r[i] - smooth_one(u, r, h, u[i]).value;
        rss += d * d;
    }
    return rss;
}

// Bandwidth minimizing generalized cross-validation over a 10-point
// logarithmic grid spanning [0.01, 0.5] of the projection range.
double gcv_bandwidth(const std::vector<double>& u, const std::vector<double>& r) {
    const double range = projection_range(u);
    if (range <= 0.0) return 1.0;
    const std::size_t m = u.size();
    const double lo = 0.01 * range;
    const double hi = 0.5 * range;
    double best_h = hi;
    double best_gcv = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 10; ++t) {
        const double h = lo * std::pow(hi / lo, static_cast<double>(t) / 9.0);
        double rss = 0.0, trace = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const SmoothPoint sp = smooth_one(u, r, h, u[i]);
            const double d = r[i] - sp.value;
            rss += d * d;
            trace += sp.self_weight;
        }
        const double dof = 1.0 - trace / static_cast<double>(m);
        if (dof <= 1e-9) continue;
        const double gcv = rss / static_cast<double>(m) / (dof * dof);
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best_h = h;
        }
    }
    return best_h;
}

// ---- projection pursuit direction search ----

std::vector<double> projections(const Matrix& x, const std::vector<double>& a) {
    std::vector<double> u(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) u[i] = kernels::dot(x.row(i), a.data(), x.cols());
    return u;
}

bool normalize(std::vector<double>& v) {
    const double n = std::sqrt(kernels::sumsq(v.data(), v.size()));
    if (!(n > 0.0) || !std::isfinite(n)) return false;
    for (double& e : v) e /= n;
    return true;
}

// Largest-magnitude entry positive so refits are reproducible.
void fix_direction_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::fabs(v[i]) > best) {
            best = std::fabs(v[i]);
            arg = i;
        }
    if (v[arg] < 0.0)
        for (double& e : v) e = -e;
}

// Between-bin variance of the residual over 50 equal-width bins: a cheap
// stand-in for the smoothed explained variance, used only to rank starts.
double binned_score(const std::vector<double>& u, const std::vector<double>& r) {
    constexpr std::size_t kBins = 50;
    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    std::vector<double> sum(kBins, 0.0);
    std::vector<std::size_t> cnt(kBins, 0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        auto b = static_cast<std::size_t>((u[i] - lo) / (hi - lo) * kBins);
        if (b >= kBins) b = kBins - 1;
        sum[b] += r[i];
        cnt[b] += 1;
    }
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double score = 0.0;
    for (std::size_t b = 0; b < kBins; ++b) {
        if (cnt[b] == 0) continue;
        const double d = sum[b] / static_cast<double>(cnt[b]) - mean;
        score += static_cast<double>(cnt[b]) * d * d;
    }
    return score;
}

// Explained sum of squares under the rule-of-thumb smoother; the quantity
// the refinement climbs.
double explained_ss(const Matrix& x, const std::vector<double>& r, const std::vector<double>& a) {
    const std::vector<double> u = projections(x, a);
    if (projection_range(u) <= 0.0) return 0.0;
    const double total = kernels::sumsq(r.data(), r.size());
    return total - smooth_rss(u, r, rot_bandwidth(u));
}

std::vector<double> ols_direction(const Matrix& x, const std::vector<double>& r) {
    const std::size_t m = x.rows(), p = x.cols();
    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) mean[j] += x(i, j);
    for (double& v : mean) v /= static_cast<double>(m);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                              static_cast<Eigen::Index>(p));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < m; ++i) {
        Eigen::VectorXd xi(static_cast<Eigen::Index>(p));
        for (std::size_t j = 0; j < p; ++j) xi(static_cast<Eigen::Index>(j)) = x(i, j) - mean[j];
        g += xi * xi.transpose();
        rhs += r[i] * xi;
    }
    g += 1e-12 * g.trace() / static_cast<double>(p) *
         Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    const Eigen::VectorXd beta = g.ldlt().solve(rhs);
    std::vector<double> out(p);
    for (std::size_t j = 0; j < p; ++j) out[j] = beta(static_cast<Eigen::Index>(j));
    return out;
}

// One Gauss-Newton pass: linearize the ridge around the current projection
// and re-solve for the direction; a backtracking blend guards the step.
void refine_direction(const Matrix& x, const std::vector<double>& r, std::vector<double>& a,
                      double& best) {
    const std::size_t m = x.rows(), p = x.cols();
    for (int iter = 0; iter < 10; ++iter) {
        const std::vector<double> u = projections(x, a);
        if (projection_range(u) <= 0.0) return;
        const double h = rot_bandwidth(u);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                  static_cast<Eigen::Index>(p));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < m; ++i) {
            const SmoothPoint sp = smooth_one(u, r, h, u[i]);
            const double c = sp.slope;
            if (c == 0.0) continue;
            const double target = (r[i] - sp.value) + c * u[i];
            Eigen::Map<const Eigen::VectorXd> xi(x.row(i), static_cast<Eigen::Index>(p));
            g += (c * c) * xi * xi.transpose();
            rhs += (c * target) * xi;
        }
        g += 1e-12 * (g.trace() + 1.0) / static_cast<double>(p) *
             Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
        const Eigen::VectorXd sol = g.ldlt().solve(rhs);
        std::vector<double> beta(p);
        bool finite = true;
        for (std::size_t j = 0; j < p; ++j) {
            beta[j] = sol(static_cast<Eigen::Index>(j));
            finite = finite && std::isfinite(beta[j]);
        }
        if (!finite || !normalize(beta)) return;
        if (kernels::dot(beta.data(), a.data(), p) < 0.0)
            for (double& v : beta) v = -v;

        bool accepted = false;
        for (double t = 1.0; t >= 0.0625; t *= 0.5) {
            std::vector<double> cand(p);
            for (std::size_t j = 0; j < p; ++j) cand[j] = (1.0 - t) * a[j] + t * beta[j];
            if (!normalize(cand)) break;
            const double obj = explained_ss(x, r, cand);
            if (obj > best * (1.0 + 1e-10) + 1e-300) {
                a = std::move(cand);
                best = obj;
                accepted = true;
                break;
            }
        }
        if (!accepted) return;
    }
}

struct TermFit {
    RidgeTerm term;
    std::vector<double> fitted;   // smoother values at the training rows
};

TermFit fit_one_term(const Matrix& x, const std::vector<double>& r, Rng& rng) {
    const std::size_t m = x.rows(), p = x.cols();

    std::vector<std::vector<double>> starts;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> e(p, 0.0);
        e[j] = 1.0;
        starts.push_back(std::move(e));
    }
    std::vector<double> ols = ols_direction(x, r);
    if (normalize(ols)) starts.push_back(std::move(ols));
    for (int s = 0; s < 4; ++s) {
        std::vector<double> v(p);
        for (double& e : v) e = rng.normal();
        if (normalize(v)) starts.push_back(std::move(v));
    }

    std::vector<std::pair<double, std::size_t>> ranked(starts.size());
    for (std::size_t s = 0; s < starts.size(); ++s)
        ranked[s] = {binned_score(projections(x, starts[s]), r), s};
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<double> best_dir = starts[ranked[0].second];
    double best_obj = explained_ss(x, r, best_dir);
    const std::size_t tries = std::min<std::size_t>(2, ranked.size());
    for (std::size_t s = 0; s < tries; ++s) {
        std::vector<double> a = starts[ranked[s].second];
        double obj = explained_ss(x, r, a);
        refine_direction(x, r, a, obj);
        if (obj > best_obj) {
            best_obj = obj;
            best_dir = std::move(a);
        }
    }
    fix_direction_sign(best_dir);

    TermFit out;
    out.term.direction = best_dir;
    const std::vector<double> u = projections(x, best_dir);
    out.term.bandwidth = gcv_bandwidth(u, r);

    std::vector<double> knots(u);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> values(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i)
        values[i] = smooth_one(u, r, out.term.bandwidth, knots[i]).value;

    out.fitted.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto it = std::lower_bound(knots.begin(), knots.end(), u[i]);
        out.fitted[i] = values[static_cast<std::size_t>(it - knots.begin())];
    }
    out.term.knots = std::move(knots);
    out.term.values = std::move(values);

    const double gg = kernels::sumsq(out.fitted.data(), m);
    const double gr = kernels::dot(out.fitted.data(), r.data(), m);
    out.term.weight = (gg > 0.0 && std::isfinite(gr / gg)) ? gr / gg : 0.0;
    return out;
}

double interp_clamped(const std::vector<double>& knots, const std::vector<double>& values,
                      double u) {
    if (u <= knots.front()) return values.front();
    if (u >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - knots.begin());
    const double t = (u - knots[j - 1]) / (knots[j] - knots[j - 1]);
    return values[j - 1] + t * (values[j] - values[j - 1]);
}

// ---- pipeline helpers ----

std::vector<double> scale_point(const FunctionalMetamodel& model, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = (x[j] - model.input_min[j]) / model.input_range[j];
    return out;
}

// Majority vote among the classifier_k nearest training inputs; a tied vote
// falls back to the single nearest neighbour's label.
std::size_t classify(const FunctionalMetamodel& model, const std::vector<double>& xs) {
    const auto nb = nearest_rows(model.inputs, xs.data(), model.classifier_k);
    std::vector<std::size_t> votes(model.clusters.size(), 0);
    for (const auto& [d2, i] : nb) votes[static_cast<std::size_t>(model.labels[i])] += 1;
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[best]) {
            best = c;
            tie = false;
        } else if (votes[c] == votes[best]) {
            tie = true;
        }
    }
    if (tie) best = static_cast<std::size_t>(model.labels[nb.front().second]);
    return best;
}

std::size_t default_graph_k(std::size_t n) {
    const auto root = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(n))));
    return std::min(n - 1, std::max<std::size_t>(2, root));
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols(), out.row(i));
    return out;
}

}  // namespace

double local_sigma(const std::vector<double>& distances_sorted) {
    if (distances_sorted.empty())
        throw DimensionError("at least one neighbour distance is required");
    for (std::size_t i = 0; i < distances_sorted.size(); ++i) {
        if (!std::isfinite(distances_sorted[i]))
            throw DomainError("neighbour distances must be finite");
        if (i > 0 && distances_sorted[i] < distances_sorted[i - 1])
            throw DomainError("neighbour distances must be sorted ascending");
    }
    const double d1 = distances_sorted.front();
    const double dk = distances_sorted.back();
    if (d1 <= 0.0)
        throw DomainError("nearest neighbour distance is zero; deduplicate the training inputs");
    const double a = d1 * d1;
    const double b = dk * dk;
    if (b == a) return a;
    return (b - a) / std::log1p((b - a) / a);
}

std::size_t fknn_select_k(const Matrix& train_x, const Matrix& train_y) {
    const std::size_t m = train_x.rows();
    if (train_y.rows() != m)
        throw DimensionError("inputs and curves disagree: " + std::to_string(m) + " vs " +
                             std::to_string(train_y.rows()) + " rows");
    if (m <= 2) return 1;

    std::vector<std::size_t> grid;
    const std::size_t root = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(m))));
    for (std::size_t k : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{5},
                          std::size_t{8}, std::size_t{13}, root})
        grid.push_back(std::min(k, m - 1));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double best_err = std::numeric_limits<double>::infinity();
    std::size_t best_k = grid.front();
    for (const std::size_t k : grid) {
        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto nb = nearest_rows(train_x, train_x.row(i), k, i);
            std::vector<double> pred;
            if (k == 1) {
                pred = train_y.row_copy(nb.front().second);
            } else {
                pred = weighted_mean(train_x, train_y, nb, k, i);
            }
            err += kernels::sqdist(pred.data(), train_y.row(i), train_y.cols());
        }
        if (err < best_err) {
            best_err = err;
            best_k = k;
        }
    }
    return best_k;
}

std::vector<double> fknn_predict(const Matrix& train_x, const Matrix& train_y,
                                 const std::vector<double>& x, std::size_t k) {
    const std::size_t m = train_x.rows();
    if (m == 0) throw DimensionError("training set is empty");
    if (train_y.rows() != m)
        throw DimensionError("inputs and curves disagree: " + std::to_string(m) + " vs " +
                             std::to_string(train_y.rows()) + " rows");
    check_point(x, train_x.cols());
    if (k == 0) k = fknn_select_k(train_x, train_y);
    if (k > m)
        throw DimensionError("k = " + std::to_string(k) + " exceeds the " + std::to_string(m) +
                             " training points");

    const auto nb = nearest_rows(train_x, x.data(), k);
    if (k == 1) return train_y.row_copy(nb.front().second);
    return weighted_mean(train_x, train_y, nb, k);
}

ScalarRegressor ppr_fit(const Matrix& x, const std::vector<double>& z, std::size_t max_terms,
                        std::uint64_t seed) {
    const std::size_t m = x.rows();
    if (z.size() != m)
        throw DimensionError("targets have " + std::to_string(z.size()) + " entries, expected " +
                             std::to_string(m));
    if (m < 10)
        throw DimensionError("projection pursuit needs at least 10 samples, got " +
                             std::to_string(m));
    if (max_terms == 0) throw DomainError("at least one ridge term is required");
    if (!x.all_finite()) throw DomainError("inputs contain a non-finite value");
    for (double v : z)
        if (!std::isfinite(v)) throw DomainError("targets contain a non-finite value");

    ScalarRegressor model;
    model.kind = ScalarRegressor::Kind::ppr;
    model.intercept = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(m);

    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = z[i] - model.intercept;
    const double ss0 = kernels::sumsq(r.data(), m);
    model.rss.push_back(ss0);

    for (std::size_t t = 0; t < max_terms; ++t) {
        Rng rng(seed, t);
        TermFit tf = fit_one_term(x, r, rng);
        std::vector<double> r_next(m);
        for (std::size_t i = 0; i < m; ++i) r_next[i] = r[i] - tf.term.weight * tf.fitted[i];
        const double rss_prev = model.rss.back();
        const double rss_next = kernels::sumsq(r_next.data(), m);
        const double gain = rss_prev > 0.0 ? (rss_prev - rss_next) / rss_prev : 0.0;

        // The first term is always kept so a constant fit still carries its
        // (dead) ridge; later terms must pay for themselves.
        if (t > 0 && gain < 1e-3) break;
        model.terms.push_back(std::move(tf.term));
        model.rss.push_back(rss_next);
        r = std::move(r_next);
        if (gain < 1e-3) break;
        if (rss_next <= 1e-12 * ss0) break;
    }
    return model;
}

double ppr_predict(const ScalarRegressor& model, const std::vector<double>& x) {
    if (model.kind != ScalarRegressor::Kind::ppr)
        throw DomainError("not a projection pursuit model");
    double out = model.intercept;
    for (const RidgeTerm& term : model.terms) {
        if (x.size() != term.direction.size())
            throw DimensionError("query has " + std::to_string(x.size()) +
                                 " coordinates, expected " +
                                 std::to_string(term.direction.size()));
        const double u = kernels::dot(term.direction.data(), x.data(), x.size());
        out += term.weight * interp_clamped(term.knots, term.values, u);
    }
    return out;
}

ScalarRegressor knn_fit(const Matrix& x, const std::vector<double>& z, std::size_t k) {
    const std::size_t m = x.rows();
    if (m == 0) throw DimensionError("training set is empty");
    if (z.size() != m)
        throw DimensionError("targets have " + std::to_string(z.size()) + " entries, expected " +
                             std::to_string(m));
    ScalarRegressor model;
    model.kind = ScalarRegressor::Kind::knn;
    model.knn_inputs = x;
    model.knn_targets = Matrix(m, 1);
    for (std::size_t i = 0; i < m; ++i) model.knn_targets(i, 0) = z[i];
    if (k == 0) k = fknn_select_k(x, model.knn_targets);
    if (k > m)
        throw DimensionError("k = " + std::to_string(k) + " exceeds the " + std::to_string(m) +
                             " training points");
    model.knn_k = k;
    return model;
}

double scalar_predict(const ScalarRegressor& model, const std::vector<double>& x) {
    if (model.kind == ScalarRegressor::Kind::ppr) return ppr_predict(model, x);
    return fknn_predict(model.knn_inputs, model.knn_targets, x, model.knn_k).front();
}

FunctionalMetamodel fit_functional_metamodel(const Matrix& x, const Matrix& y,
                                             const MetamodelConfig& config) {
    if (x.rows() == 0 || x.cols() == 0) throw DimensionError("input matrix is empty");
    if (y.rows() != x.rows())
        throw DimensionError("inputs and curves disagree: " + std::to_string(x.rows()) + " vs " +
                             std::to_string(y.rows()) + " rows");
    if (y.cols() == 0) throw DimensionError("curve matrix is empty");
    if (!x.all_finite() || !y.all_finite())
        throw DomainError("training data contains a non-finite value");
    if (!(config.x_percent > 0.0) || config.x_percent > 100.0)
        throw ConfigError("inertia percentage must lie in (0, 100]");
    if (config.max_terms == 0) throw ConfigError("max_terms must be at least 1");
    if (config.reducer == ReducerKind::rml && config.dims == 0)
        throw ConfigError("the manifold reducer needs dims >= 1");

    FunctionalMetamodel model;
    model.config = config;
    model.p = x.cols();
    model.t = y.cols();

    // Merge exact duplicate input rows; their curves are averaged so the
    // neighbour machinery never sees a zero distance.
    std::vector<std::size_t> keep;
    std::vector<std::size_t> owner(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t found = kNone;
        for (std::size_t k = 0; k < keep.size(); ++k)
            if (std::equal(x.row(i), x.row(i) + x.cols(), x.row(keep[k]))) {
                found = k;
                break;
            }
        if (found == kNone) {
            owner[i] = keep.size();
            keep.push_back(i);
        } else {
            owner[i] = found;
        }
    }
    const std::size_t m = keep.size();
    Matrix xm = take_rows(x, keep);
    Matrix ym(m, y.cols());
    if (m != x.rows()) {
        std::vector<double> count(m, 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            kernels::axpy(1.0, y.row(i), ym.row(owner[i]), y.cols());
            count[owner[i]] += 1.0;
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) ym(i, j) /= count[i];
        model.warnings.push_back("merged " + std::to_string(x.rows() - m) +
                                 " duplicate input rows (curves averaged)");
    } else {
        ym = y;
    }

    // Min-max scaling to [0, 1]; degenerate dimensions pass through shifted.
    model.input_min.assign(model.p, 0.0);
    model.input_range.assign(model.p, 1.0);
    for (std::size_t j = 0; j < model.p; ++j) {
        double lo = xm(0, j), hi = xm(0, j);
        for (std::size_t i = 1; i < m; ++i) {
            lo = std::min(lo, xm(i, j));
            hi = std::max(hi, xm(i, j));
        }
        model.input_min[j] = lo;
        model.input_range[j] = hi > lo ? hi - lo : 1.0;
    }
    model.inputs = Matrix(m, model.p);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < model.p; ++j)
            model.inputs(i, j) = (xm(i, j) - model.input_min[j]) / model.input_range[j];

    // Cluster count: explicit, or chosen by the split-half stability scan.
    std::size_t n_clusters = config.clusters;
    if (n_clusters == 0) {
        if (m < 16) {
            n_clusters = 1;
            model.warnings.push_back("too few curves to estimate a cluster count; using one");
        } else {
            const auto est = estimate_cluster_count(ym, std::min<std::size_t>(6, m / 4), 20,
                                                    config.seed);
            if (est.no_structure) {
                n_clusters = 1;
                model.warnings.push_back("no cluster structure detected; using one cluster");
            } else {
                n_clusters = est.k;
            }
        }
    }
    if (n_clusters > m)
        throw ConfigError("clusters = " + std::to_string(n_clusters) + " exceeds the " +
                          std::to_string(m) + " training curves");
    model.labels.assign(m, 0);
    if (n_clusters > 1) {
        auto grouped = cluster_curves(ym, n_clusters);
        model.labels = std::move(grouped.labels);
        model.merge_heights.reserve(grouped.tree.merges.size());
        for (const auto& step : grouped.tree.merges) model.merge_heights.push_back(step.height);
    }
    model.classifier_k = std::min<std::size_t>(
        m, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m)))));

    std::vector<std::vector<std::size_t>> members(n_clusters);
    for (std::size_t i = 0; i < m; ++i)
        members[static_cast<std::size_t>(model.labels[i])].push_back(i);

    model.clusters.resize(n_clusters);
    std::vector<std::vector<std::vector<double>>> coord_targets(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const auto& rows = members[c];
        const std::size_t nc = rows.size();
        const std::string tag = "cluster " + std::to_string(c) + ": ";
        ClusterModel& cm = model.clusters[c];
        const Matrix xc = take_rows(model.inputs, rows);
        const Matrix yc = take_rows(ym, rows);

        cm.reducer = config.reducer;
        if (cm.reducer == ReducerKind::rml) {
            if (nc < 4) {
                model.warnings.push_back(tag + "only " + std::to_string(nc) +
                                         " curves; using principal components");
                cm.reducer = ReducerKind::pca;
            } else {
                try {
                    std::size_t kg = config.k == 0 ? default_graph_k(nc)
                                                   : std::clamp<std::size_t>(config.k, 2, nc - 1);
                    Embedding emb = rml_embed(yc, config.dims, kg);
                    cm.curves = yc;
                    cm.coords = std::move(emb.coordinates);
                    cm.k = kg;
                    for (const auto& w : emb.warnings) model.warnings.push_back(tag + w);
                } catch (const Error& e) {
                    model.warnings.push_back(tag + e.what() + "; using principal components");
                    cm.reducer = ReducerKind::pca;
                }
            }
        }
        if (cm.reducer == ReducerKind::none) {
            cm.inputs = xc;
            cm.curves = yc;
            if (config.k == 0) {
                cm.k = nc == 1 ? 1 : fknn_select_k(xc, yc);
            } else if (config.k > nc) {
                cm.k = nc;
                model.warnings.push_back(tag + "k reduced to the " + std::to_string(nc) +
                                         " available curves");
            } else {
                cm.k = config.k;
            }
        }
        if (cm.reducer == ReducerKind::pca) {
            if (nc == 1) {
                cm.t0 = 0;
                cm.pca.column_means = yc.row_copy(0);
                cm.pca.components = Matrix(0, y.cols());
                cm.pca.scores = Matrix(1, 0);
            } else {
                cm.pca = pca_decompose(center_and_inertia(yc));
                if (cm.pca.rank() == 0) {
                    cm.t0 = 0;
                } else if (config.dims > 0) {
                    cm.t0 = std::min(config.dims, cm.pca.rank());
                    if (cm.t0 < config.dims)
                        model.warnings.push_back(tag + "rank " + std::to_string(cm.pca.rank()) +
                                                 " is below the requested " +
                                                 std::to_string(config.dims) + " components");
                } else {
                    cm.t0 = truncate_components(cm.pca, config.x_percent);
                }
            }
        }

        // Reduced coordinates this cluster must regress.
        const std::size_t n_coords =
            cm.reducer == ReducerKind::pca ? cm.t0
            : cm.reducer == ReducerKind::rml ? cm.coords.cols()
                                             : 0;
        cm.regressors.resize(n_coords);
        coord_targets[c].resize(n_coords);
        for (std::size_t j = 0; j < n_coords; ++j)
            coord_targets[c][j] = cm.reducer == ReducerKind::pca
                                      ? cm.pca.scores.col_copy(j)
                                      : cm.coords.col_copy(j);
        if (n_coords > 0 && config.regressor == RegressorKind::ppr && nc < 10)
            model.warnings.push_back(tag + "only " + std::to_string(nc) +
                                     " curves; using nearest-neighbour regression");
    }

    // Per-coordinate fits are independent; flatten them into one task list.
    struct Task {
        std::size_t c = 0;
        std::size_t j = 0;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < n_clusters; ++c)
        for (std::size_t j = 0; j < model.clusters[c].regressors.size(); ++j)
            tasks.push_back({c, j});
    std::vector<Matrix> cluster_inputs(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c)
        cluster_inputs[c] = take_rows(model.inputs, members[c]);
    parallel_for(tasks.size(), [&](std::size_t t) {
        const auto [c, j] = tasks[t];
        const Matrix& xc = cluster_inputs[c];
        const std::vector<double>& z = coord_targets[c][j];
        if (config.regressor == RegressorKind::ppr && xc.rows() >= 10) {
            const std::uint64_t seed = config.seed + 1000003u * c + 7919u * j;
            model.clusters[c].regressors[j] = ppr_fit(xc, z, config.max_terms, seed);
        } else {
            model.clusters[c].regressors[j] = knn_fit(xc, z, config.k);
        }
    });
    return model;
}

std::vector<double> predict_functional(const FunctionalMetamodel& model,
                                       const std::vector<double>& x, PredictionInfo* info) {
    if (model.clusters.empty()) throw DomainError("the metamodel is not fitted");
    check_point(x, model.p);
    const std::vector<double> xs = scale_point(model, x);

    const std::size_t c = model.clusters.size() == 1 ? 0 : classify(model, xs);
    const ClusterModel& cm = model.clusters[c];
    if (info) {
        info->cluster = c;
        info->reduced.clear();
    }

    if (cm.reducer == ReducerKind::none) return fknn_predict(cm.inputs, cm.curves, xs, cm.k);

    std::vector<double> z(cm.regressors.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = scalar_predict(cm.regressors[j], xs);
    if (info) info->reduced = z;

    if (cm.reducer == ReducerKind::pca) {
        if (cm.t0 == 0) return cm.pca.column_means;
        Matrix scores(1, cm.t0);
        for (std::size_t j = 0; j < cm.t0; ++j) scores(0, j) = z[j];
        return reconstruct_from_scores(cm.pca, scores, cm.t0).row_copy(0);
    }
    const std::size_t k_rec = std::min(cm.curves.rows(), std::max(cm.coords.cols() + 1, cm.k));
    return rml_reconstruct(cm.curves, cm.coords, z, k_rec);
}

}  // namespace funscreen
