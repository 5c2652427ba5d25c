#include "funscreen/gsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "funscreen/ensemble.hpp"
#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void validate_effect(const std::vector<int>& effect, std::size_t p) {
    if (effect.empty()) throw DomainError("empty effect");
    for (std::size_t i = 0; i < effect.size(); ++i) {
        if (effect[i] < 0 || static_cast<std::size_t>(effect[i]) >= p)
            throw DomainError("effect factor index " + std::to_string(effect[i]) +
                              " outside design with " + std::to_string(p) + " factors");
        if (i > 0 && effect[i] <= effect[i - 1])
            throw DomainError("effect indices must be strictly increasing");
    }
}

std::vector<double> contrast_column(const DesignMatrix& d, const std::vector<int>& effect) {
    const std::size_t n = d.runs();
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j : effect) prod *= d(i, static_cast<std::size_t>(j));
        c[i] = prod;
    }
    return c;
}

// Contrast entries are +-1, so dot products are integers; exact comparisons
// detect aliasing without tolerance choices.
void validate_effect_set(const DesignMatrix& d, const std::vector<std::vector<double>>& contrasts,
                         const std::vector<std::vector<int>>& effects) {
    const auto n = static_cast<long long>(d.runs());
    for (std::size_t a = 0; a < contrasts.size(); ++a) {
        long long s = 0;
        for (double v : contrasts[a]) s += static_cast<long long>(v);
        if (s == n || s == -n)
            throw DomainError("effect " + EffectSet::label(effects[a]) +
                              " is aliased with the intercept in this design");
        for (std::size_t b = a + 1; b < contrasts.size(); ++b) {
            long long dotp = 0;
            for (std::size_t i = 0; i < contrasts[a].size(); ++i)
                dotp += static_cast<long long>(contrasts[a][i] * contrasts[b][i]);
            if (dotp == n || dotp == -n)
                throw DomainError("effects " + EffectSet::label(effects[a]) + " and " +
                                  EffectSet::label(effects[b]) + " are aliased in this design");
            if (dotp != 0)
                throw DomainError("design is not orthogonal for effects " +
                                  EffectSet::label(effects[a]) + " and " +
                                  EffectSet::label(effects[b]));
        }
    }
}

}  // namespace

EffectSet EffectSet::main_effects(int p) {
    EffectSet s;
    for (int j = 0; j < p; ++j) s.effects.push_back({j});
    return s;
}

EffectSet EffectSet::up_to_order(int p, int order) {
    EffectSet s;
    std::vector<int> idx;
    for (int size = 1; size <= std::min(order, p); ++size) {
        idx.assign(static_cast<std::size_t>(size), 0);
        for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (;;) {
            s.effects.push_back(idx);
            int i = size - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - size + i) --i;
            if (i < 0) break;
            ++idx[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < size; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return s;
}

EffectSet EffectSet::all_effects(int p) {
    if (p > 16) throw DomainError("full effect enumeration limited to 16 factors");
    return up_to_order(p, p);
}

std::string EffectSet::label(const std::vector<int>& effect) {
    std::string out;
    for (std::size_t i = 0; i < effect.size(); ++i) {
        if (i != 0) out += ':';
        out += DesignMatrix::factor_name(static_cast<std::size_t>(effect[i]));
    }
    return out;
}

double effect_sum_of_squares(const DesignMatrix& d, const std::vector<double>& h,
                             const std::vector<int>& effect) {
    if (d.coding() != Coding::factorial)
        throw DomainError("ANOVA contrasts require a +-1 coded design");
    if (h.size() != d.runs())
        throw DimensionError("response has " + std::to_string(h.size()) + " entries, design has " +
                             std::to_string(d.runs()) + " runs");
    validate_effect(effect, d.factors());
    const auto c = contrast_column(d, effect);
    const double ct_h = kernels::dot(c.data(), h.data(), h.size());
    return ct_h * ct_h / static_cast<double>(d.runs());
}

std::vector<double> compute_si(const DesignMatrix& d, const Matrix& scores,
                               const std::vector<int>& effect, double var_floor) {
    if (d.coding() != Coding::factorial)
        throw DomainError("ANOVA contrasts require a +-1 coded design");
    if (scores.rows() != d.runs())
        throw DimensionError("score matrix has " + std::to_string(scores.rows()) +
                             " rows, design has " + std::to_string(d.runs()) + " runs");
    validate_effect(effect, d.factors());
    const std::size_t n = scores.rows();
    const auto c = contrast_column(d, effect);

    std::vector<double> si(scores.cols(), kNan);
    for (std::size_t k = 0; k < scores.cols(); ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += scores(i, k);
        mean /= static_cast<double>(n);
        double ss_total = 0.0, ct_h = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double h = scores(i, k) - mean;
            ss_total += h * h;
            ct_h += c[i] * h;
        }
        if (ss_total > var_floor) si[k] = (ct_h * ct_h / static_cast<double>(n)) / ss_total;
    }
    return si;
}

GsiReport compute_gsi(const DesignMatrix& d, const Matrix& curves, const EffectSet& effects,
                      double x_percent) {
    if (d.coding() != Coding::factorial)
        throw DomainError("screening requires a +-1 coded design");
    if (curves.rows() != d.runs())
        throw DimensionError("curve matrix has " + std::to_string(curves.rows()) +
                             " rows, design has " + std::to_string(d.runs()) + " runs");
    if (effects.effects.empty()) throw DomainError("effect set is empty");
    for (const auto& e : effects.effects) validate_effect(e, d.factors());

    std::vector<std::vector<double>> contrasts;
    contrasts.reserve(effects.effects.size());
    for (const auto& e : effects.effects) contrasts.push_back(contrast_column(d, e));
    validate_effect_set(d, contrasts, effects.effects);

    const std::size_t n = curves.rows();
    const std::size_t t = curves.cols();
    const std::size_t n_eff = effects.effects.size();

    const CenteredEnsemble ce = center_and_inertia(curves);
    const PcaResult pca = pca_decompose(ce);
    const std::size_t t0 = truncate_components(pca, x_percent);

    GsiReport report;
    report.effects = effects.effects;
    report.t0 = t0;
    report.gsi.assign(n_eff, 0.0);
    report.si = Matrix(n_eff, t0, kNan);
    report.inertia_shares.assign(t0, 0.0);

    const double inertia = ce.total_inertia;
    const double degenerate_floor = 1e-12 * inertia;
    std::vector<char> skipped(t0, 0);

    // Per-component pass: ANOVA of score column k against every contrast.
    // Each k writes only its own column, so the loop parallelizes cleanly.
    Matrix coef(n_eff, t0, 0.0);  // c'h / n, reused for the reconstruction
    parallel_for(t0, [&](std::size_t k) {
        std::vector<double> h(n);
        double ss_total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = pca.scores(i, k);
            ss_total += h[i] * h[i];
        }
        report.inertia_shares[k] = inertia > 0.0 ? pca.eigenvalues[k] / inertia : 0.0;
        if (ss_total <= degenerate_floor) {
            skipped[k] = 1;
            return;
        }
        for (std::size_t w = 0; w < n_eff; ++w) {
            const double ct_h = kernels::dot(contrasts[w].data(), h.data(), n);
            coef(w, k) = ct_h / static_cast<double>(n);
            report.si(w, k) = (ct_h * ct_h / static_cast<double>(n)) / ss_total;
        }
    });

    for (std::size_t k = 0; k < t0; ++k) {
        if (skipped[k]) {
            report.skipped_components.push_back(k);
            report.warnings.push_back("component " + std::to_string(k + 1) +
                                      " skipped: near-zero variance");
            continue;
        }
        for (std::size_t w = 0; w < n_eff; ++w)
            report.gsi[w] += report.inertia_shares[k] * report.si(w, k);
    }

    // Effect-projected reconstruction: scores are replaced by their ANOVA
    // projections on the retained contrasts, then mapped back to curves.
    Matrix y_approx(n, t);
    std::vector<double> h_tilde(t0 * n, 0.0);
    for (std::size_t k = 0; k < t0; ++k) {
        if (skipped[k]) continue;
        double* hk = h_tilde.data() + k * n;
        for (std::size_t w = 0; w < n_eff; ++w)
            kernels::axpy(coef(w, k), contrasts[w].data(), hk, n);
    }
    parallel_for(n, [&](std::size_t i) {
        double* row = y_approx.row(i);
        std::copy(ce.column_means.begin(), ce.column_means.end(), row);
        for (std::size_t k = 0; k < t0; ++k)
            kernels::axpy(h_tilde[k * n + i], pca.components.row(k), row, t);
    });
    report.r2_curve = dynamic_r2(curves, y_approx);
    return report;
}

std::vector<double> dynamic_r2(const Matrix& y, const Matrix& y_approx) {
    if (y.rows() != y_approx.rows() || y.cols() != y_approx.cols())
        throw DimensionError("curve matrices have different shapes");
    const std::size_t n = y.rows();
    const std::size_t t = y.cols();
    std::vector<double> r2(t, kNan);
    for (std::size_t col = 0; col < t; ++col) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += y(i, col);
        mean /= static_cast<double>(n);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double da = y_approx(i, col) - mean;
            const double dy = y(i, col) - mean;
            num += da * da;
            den += dy * dy;
        }
        if (den != 0.0) r2[col] = num / den;
    }
    return r2;
}

std::string format_screening_report(const GsiReport& report, double threshold_percent) {
    struct Row {
        std::string label;
        double percent;
        const std::vector<int>* effect;
    };
    std::vector<Row> rows;
    for (std::size_t w = 0; w < report.effects.size(); ++w) {
        const double pct = report.gsi[w] * 100.0;
        if (pct >= threshold_percent)
            rows.push_back({EffectSet::label(report.effects[w]), pct, &report.effects[w]});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.percent != b.percent) return a.percent > b.percent;
        return *a.effect < *b.effect;
    });

    std::size_t width = 6;  // "effect"
    for (const auto& r : rows) width = std::max(width, r.label.size());
    auto line = [&](const std::string& label, const std::string& value) {
        std::string out = label;
        out.append(width - label.size() + 2, ' ');
        out += value;
        out += '\n';
        return out;
    };
    auto pct_str = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::string out = line("effect", "gsi_percent");
    double total = 0.0;
    for (const auto& r : rows) {
        total += r.percent;
        out += line(r.label, pct_str(r.percent));
    }
    out += line("total", pct_str(total));
    return out;
}

}  // namespace funscreen
