#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "funscreen/doe.hpp"
#include "funscreen/error.hpp"
#include "funscreen/rng.hpp"
#include "oracles.hpp"

using namespace funscreen;

namespace {

// Sum over runs of the product of the selected columns. In a regular
// two-level design this is either 0 or +-n, and it is nonzero exactly when
// the column subset forms a word of the defining relation.
double subset_product_sum(const DesignMatrix& d, const std::vector<std::size_t>& cols) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.runs(); ++i) {
        double prod = 1.0;
        for (std::size_t c : cols) prod *= d(i, c);
        s += prod;
    }
    return s;
}

// Brute-force resolution check: no subset of up to `max_weight` columns may
// multiply to a constant column.
void check_no_short_words(const DesignMatrix& d, std::size_t max_weight) {
    const std::size_t p = d.factors();
    std::vector<std::size_t> cols;
    for (std::size_t a = 0; a < p; ++a) {
        CHECK(subset_product_sum(d, {a}) == 0.0);
        if (max_weight < 2) continue;
        for (std::size_t b = a + 1; b < p; ++b) {
            CHECK(subset_product_sum(d, {a, b}) == 0.0);
            if (max_weight < 3) continue;
            for (std::size_t c = b + 1; c < p; ++c) CHECK(subset_product_sum(d, {a, b, c}) == 0.0);
        }
    }
}

}  // namespace

TEST_CASE("full factorial layout and orthogonality") {
    FactorialDesignSpec spec{3, 0, {}};
    const auto d = build_factorial_design(spec);
    REQUIRE(d.runs() == 8);
    REQUIRE(d.factors() == 3);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(d(i, 0) == (i % 2 ? 1.0 : -1.0));
        CHECK(d(i, 1) == ((i / 2) % 2 ? 1.0 : -1.0));
        CHECK(d(i, 2) == (i / 4 ? 1.0 : -1.0));
    }
    check_no_short_words(d, 3);
    const auto a = alias_structure(spec);
    CHECK(a.full_factorial);
    CHECK(a.resolution_label() == "full");
    CHECK(a.word_length_pattern.empty());
}

TEST_CASE("half fraction of four factors is resolution IV") {
    const auto ff = generate_fractional_factorial(4, 4, 0);
    CHECK(ff.spec.p == 4);
    CHECK(ff.spec.q == 1);
    REQUIRE(ff.spec.generators.size() == 1);
    CHECK(ff.spec.generators[0] == std::vector<int>{0, 1, 2});
    CHECK(ff.design.runs() == 8);
    CHECK(ff.aliases.resolution == 4);
    CHECK(ff.aliases.resolution_label() == "IV");
    REQUIRE(ff.aliases.word_length_pattern.size() == 1);
    CHECK(ff.aliases.word_length_pattern.at(4) == 1);
    check_no_short_words(ff.design, 3);
    // The single defining word covers all four columns.
    CHECK(subset_product_sum(ff.design, {0, 1, 2, 3}) == 8.0);
    for (const auto& v : ff.aliases.main_with_main) CHECK(v.empty());
    for (const auto& v : ff.aliases.main_with_pair) CHECK(v.empty());
}

TEST_CASE("seven factors in sixteen runs at resolution IV") {
    const auto ff = generate_fractional_factorial(7, 4, 123);
    CHECK(ff.design.runs() == 16);
    CHECK(ff.spec.q == 3);
    CHECK(ff.aliases.resolution == 4);
    check_no_short_words(ff.design, 3);
}

TEST_CASE("alias bookkeeping for a resolution III fraction") {
    FactorialDesignSpec spec{5, 2, {{0, 1}, {0, 2}}};
    const auto a = alias_structure(spec);
    CHECK_FALSE(a.full_factorial);
    CHECK(a.resolution == 3);
    CHECK(a.resolution_label() == "III");
    REQUIRE(a.word_length_pattern.size() == 2);
    CHECK(a.word_length_pattern.at(3) == 2);
    CHECK(a.word_length_pattern.at(4) == 1);
    for (const auto& v : a.main_with_main) CHECK(v.empty());
    using Pair = std::pair<int, int>;
    CHECK(a.main_with_pair[0] == std::vector<Pair>{{1, 3}, {2, 4}});
    CHECK(a.main_with_pair[1] == std::vector<Pair>{{0, 3}});
    CHECK(a.main_with_pair[2] == std::vector<Pair>{{0, 4}});
    CHECK(a.main_with_pair[3] == std::vector<Pair>{{0, 1}});
    CHECK(a.main_with_pair[4] == std::vector<Pair>{{0, 2}});

    const auto d = build_factorial_design(spec);
    CHECK(subset_product_sum(d, {0, 1, 3}) == 8.0);
    CHECK(subset_product_sum(d, {0, 2, 4}) == 8.0);
    CHECK(subset_product_sum(d, {1, 2, 3, 4}) == 8.0);
}

TEST_CASE("saturated resolution III design for seven factors") {
    const auto ff = generate_fractional_factorial(7, 3, 0);
    CHECK(ff.design.runs() == 8);
    CHECK(ff.spec.q == 4);
    CHECK(ff.aliases.resolution == 3);
    check_no_short_words(ff.design, 2);
}

TEST_CASE("small factor counts fall back to full factorials") {
    for (int p = 1; p <= 3; ++p) {
        const auto ff = generate_fractional_factorial(p, 4, 0);
        CHECK(ff.spec.q == 0);
        CHECK(ff.aliases.full_factorial);
        CHECK(ff.design.runs() == (std::size_t{1} << p));
    }
}

TEST_CASE("generated resolution IV designs stay clean as p grows") {
    for (int p = 2; p <= 10; ++p) {
        const auto ff = generate_fractional_factorial(p, 4, 0);
        if (!ff.aliases.full_factorial) CHECK(ff.aliases.resolution >= 4);
        CHECK(static_cast<long long>(ff.design.runs()) >= 2LL * p);
        check_no_short_words(ff.design, 3);
    }
    // Spot checks further out, pairs only (triples get expensive).
    for (int p : {16, 31}) {
        const auto ff = generate_fractional_factorial(p, 4, 0);
        CHECK(ff.aliases.resolution >= 4);
        CHECK(ff.design.runs() == std::size_t{1} << ff.spec.base_factors());
        CHECK(ff.design.runs() >= static_cast<std::size_t>(2 * p));
        check_no_short_words(ff.design, 2);
    }
}

TEST_CASE("construction errors") {
    CHECK_THROWS_AS(generate_fractional_factorial(0, 4, 0), ConstructionError);
    CHECK_THROWS_AS(generate_fractional_factorial(5, 5, 0), ConstructionError);
    CHECK_THROWS_AS(generate_fractional_factorial(5, 2, 0), ConstructionError);
    CHECK_THROWS_AS(generate_fractional_factorial(3000000, 4, 0), ConstructionError);

    FactorialDesignSpec bad;
    bad.p = 4;
    bad.q = 1;
    bad.generators = {{0, 0}};
    CHECK_THROWS_AS(bad.validate(), ConstructionError);
    bad.generators = {{0, 7}};
    CHECK_THROWS_AS(bad.validate(), ConstructionError);
    bad.generators = {{}};
    CHECK_THROWS_AS(bad.validate(), ConstructionError);
    bad.q = 2;
    bad.generators = {{0, 1}, {0, 1}};
    CHECK_THROWS_AS(bad.validate(), ConstructionError);
    bad.q = 5;
    bad.generators = {{0}, {0}, {0}, {0}, {0}};
    CHECK_THROWS_AS(bad.validate(), ConstructionError);
}

TEST_CASE("wrap-around discrepancy closed forms") {
    Matrix one(1, 1);
    one(0, 0) = 0.5;
    const double w = wrap_around_discrepancy(DesignMatrix(one, Coding::unit_cube));
    CHECK(std::fabs(w - 1.0 / 6.0) <= 1e-15);

    Matrix fac(2, 1);
    fac(0, 0) = 1.0;
    fac(1, 0) = -1.0;
    CHECK_THROWS_AS(wrap_around_discrepancy(DesignMatrix(fac, Coding::factorial)), DomainError);
}

TEST_CASE("wrap-around discrepancy matches the direct triple loop") {
    Rng rng(2024);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t p = 1 + rng.below(4);
        Matrix x(n, p);
        for (auto& v : x.data()) v = rng.uniform();
        const double fast = wrap_around_discrepancy(DesignMatrix(x, Coding::unit_cube));
        std::vector<std::vector<double>> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = x.row_copy(i);
        const double slow = oracles::naive_wrap_discrepancy(rows);
        CHECK(std::fabs(fast - slow) <= 1e-12 * std::max(1.0, std::fabs(slow)));
    }
}

TEST_CASE("wrap-around discrepancy is invariant to coordinate shifts mod 1") {
    Rng rng(77);
    Matrix x(6, 3);
    for (auto& v : x.data()) v = rng.uniform();
    const double base = wrap_around_discrepancy(DesignMatrix(x, Coding::unit_cube));
    Matrix shifted = x;
    for (std::size_t j = 0; j < 3; ++j) {
        const double c = rng.uniform();
        for (std::size_t i = 0; i < 6; ++i) {
            double v = x(i, j) + c;
            if (v >= 1.0) v -= 1.0;
            shifted(i, j) = v;
        }
    }
    const double moved = wrap_around_discrepancy(DesignMatrix(shifted, Coding::unit_cube));
    CHECK(std::fabs(base - moved) <= 1e-12);
}

TEST_CASE("optimized LHS keeps strata and improves the start") {
    const int n = 8;
    const auto res = optimize_lhs(n, 3, 4000, 7);
    REQUIRE(res.design.runs() == 8);
    REQUIRE(res.design.factors() == 3);

    // Each column must remain a permutation of the cell midpoints.
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = res.design(static_cast<std::size_t>(i), j);
        std::sort(col.begin(), col.end());
        for (int k = 0; k < n; ++k)
            CHECK(col[static_cast<std::size_t>(k)] == (2.0 * k + 1.0) / (2.0 * n));
    }

    CHECK(res.final_discrepancy <= res.initial_discrepancy);
    CHECK(res.final_discrepancy < res.initial_discrepancy);
    REQUIRE(!res.best_trace.empty());
    CHECK(res.best_trace.front() == res.initial_discrepancy);
    for (std::size_t i = 1; i < res.best_trace.size(); ++i)
        CHECK(res.best_trace[i] <= res.best_trace[i - 1]);

    // The reported final value is the actual discrepancy of the returned design.
    const double recomputed = wrap_around_discrepancy(res.design);
    CHECK(std::fabs(recomputed - res.final_discrepancy) <= 1e-12 * std::max(1.0, std::fabs(recomputed)));

    const auto again = optimize_lhs(n, 3, 4000, 7);
    CHECK(again.final_discrepancy == res.final_discrepancy);
    CHECK(again.design.values().data() == res.design.values().data());

    const auto other = optimize_lhs(n, 3, 4000, 8);
    CHECK(other.design.values().data() != res.design.values().data());
}

TEST_CASE("LHS edge cases") {
    const auto tiny = optimize_lhs(1, 2, 100, 3);
    CHECK(tiny.design(0, 0) == 0.5);
    CHECK(tiny.design(0, 1) == 0.5);
    CHECK(tiny.initial_discrepancy == tiny.final_discrepancy);

    const auto frozen = optimize_lhs(5, 2, 0, 11);
    CHECK(frozen.initial_discrepancy == frozen.final_discrepancy);
    CHECK(frozen.best_trace.size() == 1);

    CHECK_THROWS_AS(optimize_lhs(0, 2, 10, 0), ConstructionError);
    CHECK_THROWS_AS(optimize_lhs(4, 0, 10, 0), ConstructionError);
    CHECK_THROWS_AS(optimize_lhs(4, 2, -1, 0), ConstructionError);
}
