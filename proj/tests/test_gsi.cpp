#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "funscreen/doe.hpp"
#include "funscreen/error.hpp"
#include "funscreen/gsi.hpp"
#include "funscreen/rng.hpp"

using namespace funscreen;

namespace {

DesignMatrix full_factorial(int p) {
    return build_factorial_design(FactorialDesignSpec{p, 0, {}});
}

std::vector<double> column_contrast(const DesignMatrix& d, const std::vector<int>& effect) {
    std::vector<double> c(d.runs(), 1.0);
    for (std::size_t i = 0; i < d.runs(); ++i)
        for (int j : effect) c[i] *= d(i, static_cast<std::size_t>(j));
    return c;
}

// Linear additive curves over a +-1 design: y_i(t) = b(t) + sum_j a_j(t) x_ij.
// On an orthogonal design the main-effect share of inertia is
// |a_j|^2 / sum_l |a_l|^2 exactly.
struct LinearCurves {
    Matrix y;
    std::vector<double> expected_gsi;
};

LinearCurves make_linear_curves(const DesignMatrix& d, std::size_t t, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t p = d.factors();
    Matrix a(p, t);
    for (auto& v : a.data()) v = rng.normal();
    std::vector<double> b(t);
    for (auto& v : b) v = rng.normal() * 3.0;

    LinearCurves out;
    out.y = Matrix(d.runs(), t);
    for (std::size_t i = 0; i < d.runs(); ++i)
        for (std::size_t s = 0; s < t; ++s) {
            double v = b[s];
            for (std::size_t j = 0; j < p; ++j) v += a(j, s) * d(i, j);
            out.y(i, s) = v;
        }

    std::vector<double> norms(p, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t s = 0; s < t; ++s) norms[j] += a(j, s) * a(j, s);
        total += norms[j];
    }
    out.expected_gsi.resize(p);
    for (std::size_t j = 0; j < p; ++j) out.expected_gsi[j] = norms[j] / total;
    return out;
}

}  // namespace

TEST_CASE("effect set helpers") {
    CHECK(EffectSet::main_effects(3).effects ==
          std::vector<std::vector<int>>{{0}, {1}, {2}});
    CHECK(EffectSet::up_to_order(3, 2).effects ==
          std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}});
    CHECK(EffectSet::all_effects(2).effects ==
          std::vector<std::vector<int>>{{0}, {1}, {0, 1}});
    CHECK(EffectSet::all_effects(4).effects.size() == 15);
    CHECK_THROWS_AS(EffectSet::all_effects(17), DomainError);
    CHECK(EffectSet::label({0, 2}) == "V1:V3");
    CHECK(EffectSet::label({4}) == "V5");
}

TEST_CASE("contrast sums of squares on a 2^2 factorial") {
    const auto d = full_factorial(2);
    const auto c1 = column_contrast(d, {0});
    const auto c2 = column_contrast(d, {1});
    const auto c12 = column_contrast(d, {0, 1});

    CHECK(effect_sum_of_squares(d, c1, {0}) == 4.0);
    CHECK(effect_sum_of_squares(d, c2, {0}) == 0.0);
    CHECK(effect_sum_of_squares(d, c12, {0, 1}) == 4.0);
    std::vector<double> doubled(4);
    for (std::size_t i = 0; i < 4; ++i) doubled[i] = 2.0 * c12[i];
    CHECK(effect_sum_of_squares(d, doubled, {0, 1}) == 16.0);

    CHECK_THROWS_AS(effect_sum_of_squares(d, {1.0, -1.0}, {0}), DimensionError);
    CHECK_THROWS_AS(effect_sum_of_squares(d, c1, {0, 0}), DomainError);
    CHECK_THROWS_AS(effect_sum_of_squares(d, c1, {5}), DomainError);
    CHECK_THROWS_AS(effect_sum_of_squares(d, c1, {}), DomainError);
}

TEST_CASE("per-column sensitivity indices") {
    const auto d = full_factorial(3);
    const auto ca = column_contrast(d, {0});
    const auto cb = column_contrast(d, {1});

    Matrix scores(8, 3);
    for (std::size_t i = 0; i < 8; ++i) {
        scores(i, 0) = ca[i];
        scores(i, 1) = 2.0 * ca[i] + cb[i];
        scores(i, 2) = 0.0;
    }
    const auto si_a = compute_si(d, scores, {0});
    CHECK(std::fabs(si_a[0] - 1.0) <= 1e-14);
    CHECK(std::fabs(si_a[1] - 0.8) <= 1e-14);
    CHECK(std::isnan(si_a[2]));

    const auto si_b = compute_si(d, scores, {1});
    CHECK(si_b[0] == 0.0);
    CHECK(std::fabs(si_b[1] - 0.2) <= 1e-14);

    // A floor above the column's variance suppresses it.
    Matrix tiny(8, 1);
    for (std::size_t i = 0; i < 8; ++i) tiny(i, 0) = 1e-9 * ca[i];
    CHECK(std::fabs(compute_si(d, tiny, {0})[0] - 1.0) <= 1e-12);
    CHECK(std::isnan(compute_si(d, tiny, {0}, 1.0)[0]));

    CHECK_THROWS_AS(compute_si(d, Matrix(5, 1), {0}), DimensionError);
}

TEST_CASE("single influential factor explains everything") {
    const auto d = full_factorial(1);
    Matrix y(2, 3);
    const std::vector<double> a = {1.0, -2.0, 0.5};
    const std::vector<double> b = {10.0, 0.0, -4.0};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) y(i, j) = b[j] + a[j] * d(i, 0);

    const auto rep = compute_gsi(d, y, EffectSet::main_effects(1), 100.0);
    REQUIRE(rep.t0 == 1);
    CHECK(std::fabs(rep.gsi[0] - 1.0) <= 1e-12);
    REQUIRE(rep.r2_curve.size() == 3);
    for (double r : rep.r2_curve) CHECK(std::fabs(r - 1.0) <= 1e-10);
    CHECK(rep.skipped_components.empty());
    CHECK(rep.warnings.empty());
}

TEST_CASE("complete effect basis closes the decomposition") {
    const auto d = full_factorial(4);
    Rng rng(42);
    Matrix y(16, 6);
    for (auto& v : y.data()) v = rng.normal();

    const auto rep = compute_gsi(d, y, EffectSet::all_effects(4), 100.0);
    double total = 0.0;
    for (double g : rep.gsi) total += g;
    CHECK(std::fabs(total - 1.0) <= 1e-10);
    for (double r : rep.r2_curve) CHECK(std::fabs(r - 1.0) <= 1e-10);

    // Within each retained component the indices also sum to one.
    for (std::size_t k = 0; k < rep.t0; ++k) {
        double s = 0.0;
        for (std::size_t w = 0; w < rep.effects.size(); ++w) s += rep.si(w, k);
        CHECK(std::fabs(s - 1.0) <= 1e-10);
    }
    double share = 0.0;
    for (double v : rep.inertia_shares) share += v;
    CHECK(std::fabs(share - 1.0) <= 1e-10);
}

TEST_CASE("linear responses recover the analytic shares") {
    for (std::uint64_t seed : {11ull, 12ull}) {
        const auto ff = generate_fractional_factorial(5, 4, 0);
        const auto lin = make_linear_curves(ff.design, 12, seed);
        const auto rep = compute_gsi(ff.design, lin.y, EffectSet::main_effects(5), 100.0);
        double total = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(std::fabs(rep.gsi[j] - lin.expected_gsi[j]) <= 1e-10);
            total += rep.gsi[j];
        }
        CHECK(std::fabs(total - 1.0) <= 1e-10);
        for (double r : rep.r2_curve) CHECK(std::fabs(r - 1.0) <= 1e-10);
    }
}

TEST_CASE("screening is invariant to output scale") {
    const auto d = full_factorial(3);
    Rng rng(9);
    Matrix y(8, 5);
    for (auto& v : y.data()) v = rng.normal() + 2.0;
    Matrix scaled = y;
    for (auto& v : scaled.data()) v *= 7.0;

    const auto set = EffectSet::up_to_order(3, 2);
    const auto a = compute_gsi(d, y, set, 95.0);
    const auto b = compute_gsi(d, scaled, set, 95.0);
    REQUIRE(a.t0 == b.t0);
    for (std::size_t w = 0; w < set.effects.size(); ++w)
        CHECK(std::fabs(a.gsi[w] - b.gsi[w]) <= 1e-12);
}

TEST_CASE("aggregated index equals per-column anova with inertia weights") {
    // Independent route: skip the component decomposition entirely, run the
    // contrast projection on every raw output column, and weight by column
    // sums of squares. With all components retained the two must agree.
    const auto d = build_factorial_design({5, 0, {}});
    const std::size_t n = d.runs();
    Rng rng(404, 0);
    Matrix y(n, 9);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < 9; ++t) {
            double v = 0.3 * rng.normal();
            for (std::size_t j = 0; j < 5; ++j)
                v += std::sin(0.5 * static_cast<double>(j + 1) + 0.2 * static_cast<double>(t)) *
                     d(i, j);
            v += 0.8 * d(i, 0) * d(i, 3) * static_cast<double>(t + 1) / 9.0;
            y(i, t) = v;
        }

    const auto set = EffectSet::up_to_order(5, 2);
    const auto rep = compute_gsi(d, y, set, 100.0);

    std::vector<double> col_mean(9, 0.0);
    for (std::size_t t = 0; t < 9; ++t) {
        for (std::size_t i = 0; i < n; ++i) col_mean[t] += y(i, t);
        col_mean[t] /= static_cast<double>(n);
    }
    double total_ss = 0.0;
    for (std::size_t t = 0; t < 9; ++t)
        for (std::size_t i = 0; i < n; ++i) {
            const double c = y(i, t) - col_mean[t];
            total_ss += c * c;
        }
    for (std::size_t w = 0; w < set.effects.size(); ++w) {
        double ss_w = 0.0;
        for (std::size_t t = 0; t < 9; ++t) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double c = 1.0;
                for (int f : set.effects[w]) c *= d(i, static_cast<std::size_t>(f));
                dot += c * (y(i, t) - col_mean[t]);
            }
            ss_w += dot * dot / static_cast<double>(n);
        }
        CHECK(std::fabs(rep.gsi[w] - ss_w / total_ss) <= 1e-8);
    }
}

TEST_CASE("inactive factors get a near-zero index") {
    const auto d = full_factorial(3);
    Rng rng(33);
    Matrix y(8, 4);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            y(i, j) = d(i, 0) * (1.0 + 0.1 * j) + d(i, 1) * (2.0 - 0.2 * j);

    const auto rep = compute_gsi(d, y, EffectSet::main_effects(3), 100.0);
    CHECK(rep.gsi[2] <= 1e-9);
    CHECK(rep.gsi[0] > 0.05);
    CHECK(rep.gsi[1] > 0.05);
}

TEST_CASE("aliased and degenerate effect sets are rejected") {
    FactorialDesignSpec spec{3, 1, {{0, 1}}};
    const auto d = build_factorial_design(spec);
    Matrix y(4, 3);
    Rng rng(5);
    for (auto& v : y.data()) v = rng.normal();

    EffectSet aliased;
    aliased.effects = {{0, 1}, {2}};
    CHECK_THROWS_WITH_AS(compute_gsi(d, y, aliased, 100.0),
                         doctest::Contains("aliased"), DomainError);

    EffectSet intercept;
    intercept.effects = {{0, 1, 2}};
    CHECK_THROWS_WITH_AS(compute_gsi(d, y, intercept, 100.0),
                         doctest::Contains("intercept"), DomainError);

    Matrix three(3, 2);
    three(0, 0) = 1.0;
    three(0, 1) = 1.0;
    three(1, 0) = 1.0;
    three(1, 1) = -1.0;
    three(2, 0) = -1.0;
    three(2, 1) = 1.0;
    const DesignMatrix bad(three, Coding::factorial);
    Matrix y3(3, 2, 0.0);
    y3(0, 0) = 1.0;
    y3(1, 1) = 1.0;
    EffectSet mains = EffectSet::main_effects(2);
    CHECK_THROWS_WITH_AS(compute_gsi(bad, y3, mains, 100.0),
                         doctest::Contains("orthogonal"), DomainError);

    EffectSet empty;
    CHECK_THROWS_AS(compute_gsi(d, y, empty, 100.0), DomainError);
    CHECK_THROWS_AS(compute_gsi(d, Matrix(9, 3), EffectSet::main_effects(3), 100.0),
                    DimensionError);
}

TEST_CASE("dynamic fit quality") {
    Matrix y(3, 2);
    y(0, 0) = 1.0;
    y(0, 1) = 5.0;
    y(1, 0) = 2.0;
    y(1, 1) = 5.0;
    y(2, 0) = 3.0;
    y(2, 1) = 5.0;
    Matrix approx(3, 2);
    approx(0, 0) = 1.5;
    approx(0, 1) = 5.0;
    approx(1, 0) = 2.0;
    approx(1, 1) = 5.0;
    approx(2, 0) = 2.5;
    approx(2, 1) = 5.0;

    const auto r2 = dynamic_r2(y, approx);
    // Column 1: mean 2, num = 0.25 + 0 + 0.25, den = 1 + 0 + 1.
    CHECK(std::fabs(r2[0] - 0.25) <= 1e-15);
    // Column 2 is constant in the reference data.
    CHECK(std::isnan(r2[1]));

    CHECK_THROWS_AS(dynamic_r2(y, Matrix(2, 2)), DimensionError);
}

TEST_CASE("report formatting filters, sorts, and totals") {
    GsiReport rep;
    rep.effects = {{0}, {1}, {4}, {3}, {0, 2}};
    rep.gsi = {0.10, 0.10, 0.2545, 0.005, 0.0999};

    const std::string text = format_screening_report(rep, 1.0);
    const std::string expected =
        "effect  gsi_percent\n"
        "V5      25.45\n"
        "V1      10.00\n"
        "V2      10.00\n"
        "V1:V3   9.99\n"
        "total   55.44\n";
    CHECK(text == expected);

    // Threshold 0 keeps everything.
    const std::string all = format_screening_report(rep, 0.0);
    CHECK(all.find("V4") != std::string::npos);
}
