#pragma once

#include <string>
#include <vector>

#include "funscreen/design.hpp"
#include "funscreen/matrix.hpp"
#include "funscreen/pca.hpp"

namespace funscreen {

// An effect is a non-empty, strictly increasing set of 0-based factor
// indices: {j} is the main effect of factor j, {i,j} the i:j interaction.
struct EffectSet {
    std::vector<std::vector<int>> effects;

    static EffectSet main_effects(int p);
    // Every interaction up to the given order (mains first, then pairs, ...).
    static EffectSet up_to_order(int p, int order);
    // All 2^p - 1 effects of a small full factorial.
    static EffectSet all_effects(int p);

    static std::string label(const std::vector<int>& effect);
};

// ANOVA sum of squares of the contrast for one effect: (c'h)^2 / n, where c
// is the element-wise product of the design columns in the effect. h must be
// centered; the design must be +-1 coded and orthogonal for the requested
// effects.
double effect_sum_of_squares(const DesignMatrix& d, const std::vector<double>& h,
                             const std::vector<int>& effect);

// Sensitivity index of one effect on each score column: SS_effect / SS_total
// per column. Columns whose variance is at or below var_floor yield NaN.
std::vector<double> compute_si(const DesignMatrix& d, const Matrix& scores,
                               const std::vector<int>& effect, double var_floor = 0.0);

struct GsiReport {
    std::vector<std::vector<int>> effects;
    std::vector<double> gsi;        // per effect, fraction of total inertia
    Matrix si;                      // effects x t0, NaN on skipped components
    std::vector<double> inertia_shares;  // lambda_k / inertia for k < t0
    std::size_t t0 = 0;
    std::vector<double> r2_curve;   // per time index, NaN where undefined
    std::vector<std::size_t> skipped_components;
    std::vector<std::string> warnings;
};

// Full screening pipeline: center, decompose, truncate at x_percent inertia,
// ANOVA per retained component, inertia-weighted aggregation, and the dynamic
// fit quality of the effect-projected reconstruction.
GsiReport compute_gsi(const DesignMatrix& d, const Matrix& curves, const EffectSet& effects,
                      double x_percent);

// R^2_t = sum_i (yhat_it - ybar_t)^2 / sum_i (y_it - ybar_t)^2 with ybar from
// the true ensemble; exact-zero denominators yield NaN.
std::vector<double> dynamic_r2(const Matrix& y, const Matrix& y_approx);

// Plain-text table: effects at or above threshold_percent, descending GSI,
// ties broken by ascending factor indices, two decimals, total appended.
std::string format_screening_report(const GsiReport& report, double threshold_percent);

}  // namespace funscreen
