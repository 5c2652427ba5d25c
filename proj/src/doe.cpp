#include "funscreen/doe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include "funscreen/error.hpp"
#include "funscreen/kernels.hpp"
#include "funscreen/rng.hpp"
#include "funscreen/threads.hpp"

namespace funscreen {

namespace {

// 2^22 runs (~1 GiB for 32 factors) is the practical ceiling here.
constexpr int kMaxBaseFactors = 22;

std::uint64_t word_mask(const std::vector<int>& word) {
    std::uint64_t m = 0;
    for (int i : word) m |= std::uint64_t{1} << i;
    return m;
}

std::string roman(int r) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
    if (r >= 1 && r <= 8) return names[r - 1];
    return std::to_string(r);
}

// All subsets of {0..m-1} with size >= min_len, filtered to odd sizes when
// odd_only, ordered by descending size then lexicographically by indices.
std::vector<std::vector<int>> candidate_words(int m, int min_len, bool odd_only) {
    std::vector<std::vector<int>> words;
    for (int size = m; size >= min_len; --size) {
        if (odd_only && size % 2 == 0) continue;
        std::vector<int> idx(static_cast<std::size_t>(size));
        for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (;;) {
            words.push_back(idx);
            int i = size - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - size + i) --i;
            if (i < 0) break;
            ++idx[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < size; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return words;
}

double wrap_discrepancy_from_matrix(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    // Off-diagonal terms are accumulated per row, then summed in index order.
    std::vector<double> partial(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j < n; ++j)
            acc += kernels::wrap_factor(x.row(i), x.row(j), p);
        partial[i] = acc;
    });
    double off = 0.0;
    for (double v : partial) off += v;
    const double diag = static_cast<double>(n) * std::pow(1.5, static_cast<double>(p));
    const double total = diag + 2.0 * off;
    const double d2 = -std::pow(4.0 / 3.0, static_cast<double>(p)) +
                      total / (static_cast<double>(n) * static_cast<double>(n));
    return d2 < 0.0 ? 0.0 : d2;  // round-off can push the square slightly negative
}

inline double wrap1(double a, double b) {
    const double d = std::fabs(a - b);
    return 1.5 - d * (1.0 - d);
}

}  // namespace

std::string AliasStructure::resolution_label() const {
    return full_factorial ? "full" : roman(resolution);
}

DesignMatrix build_factorial_design(const FactorialDesignSpec& spec) {
    spec.validate();
    const int m = spec.base_factors();
    if (m > kMaxBaseFactors)
        throw ConstructionError("design needs 2^" + std::to_string(m) +
                                " runs, above the supported limit of 2^" +
                                std::to_string(kMaxBaseFactors));
    const std::size_t n = std::size_t{1} << m;
    Matrix d(n, static_cast<std::size_t>(spec.p));
    for (std::size_t i = 0; i < n; ++i) {
        double* row = d.row(i);
        for (int j = 0; j < m; ++j) row[j] = (i >> j) & 1 ? 1.0 : -1.0;
        for (int g = 0; g < spec.q; ++g) {
            double prod = 1.0;
            for (int b : spec.generators[static_cast<std::size_t>(g)]) prod *= row[b];
            row[m + g] = prod;
        }
    }
    return DesignMatrix(std::move(d), Coding::factorial);
}

AliasStructure alias_structure(const FactorialDesignSpec& spec) {
    spec.validate();
    AliasStructure out;
    out.main_with_main.assign(static_cast<std::size_t>(spec.p), {});
    out.main_with_pair.assign(static_cast<std::size_t>(spec.p), {});
    if (spec.q == 0) {
        out.full_factorial = true;
        return out;
    }
    if (spec.q > 26)
        throw ConstructionError("alias enumeration over 2^" + std::to_string(spec.q) +
                                " defining words is not supported");

    const int m = spec.base_factors();
    std::vector<std::uint64_t> defining(static_cast<std::size_t>(spec.q));
    for (int g = 0; g < spec.q; ++g)
        defining[static_cast<std::size_t>(g)] =
            word_mask(spec.generators[static_cast<std::size_t>(g)]) |
            (std::uint64_t{1} << (m + g));

    // Gray-code walk over all non-empty subsets: one XOR per defining word.
    int min_weight = spec.p + 1;
    std::uint64_t current = 0;
    const std::uint64_t count = std::uint64_t{1} << spec.q;
    for (std::uint64_t g = 1; g < count; ++g) {
        current ^= defining[static_cast<std::size_t>(std::countr_zero(g))];
        const int w = std::popcount(current);
        ++out.word_length_pattern[w];
        min_weight = std::min(min_weight, w);
        if (w == 2 || w == 3) {
            int f[3];
            int c = 0;
            std::uint64_t bits = current;
            while (bits) {
                f[c++] = std::countr_zero(bits);
                bits &= bits - 1;
            }
            if (w == 2) {
                out.main_with_main[static_cast<std::size_t>(f[0])].push_back(f[1]);
                out.main_with_main[static_cast<std::size_t>(f[1])].push_back(f[0]);
            } else {
                out.main_with_pair[static_cast<std::size_t>(f[0])].emplace_back(f[1], f[2]);
                out.main_with_pair[static_cast<std::size_t>(f[1])].emplace_back(f[0], f[2]);
                out.main_with_pair[static_cast<std::size_t>(f[2])].emplace_back(f[0], f[1]);
            }
        }
    }
    out.resolution = min_weight;
    for (auto& v : out.main_with_main) std::sort(v.begin(), v.end());
    for (auto& v : out.main_with_pair) std::sort(v.begin(), v.end());
    return out;
}

FractionalFactorial generate_fractional_factorial(int p, int target_resolution,
                                                  std::uint64_t /*seed*/) {
    if (p < 1) throw ConstructionError("factor count must be >= 1");
    if (target_resolution != 3 && target_resolution != 4)
        throw ConstructionError("target resolution must be 3 or 4");

    // Capacity at 2^m runs: 2^m - 1 factors at resolution III (every word of
    // length >= 2), 2^(m-1) at resolution IV (odd words of length >= 3).
    int m = 1;
    auto capacity = [&](int base) -> long long {
        return target_resolution == 3 ? (1LL << base) - 1 : (1LL << (base - 1));
    };
    while (capacity(m) < p) {
        ++m;
        if (m > kMaxBaseFactors)
            throw ConstructionError(
                "no supported run count meets resolution " + roman(target_resolution) + " for " +
                std::to_string(p) + " factors; smallest feasible run count exceeds 2^" +
                std::to_string(kMaxBaseFactors));
    }
    if (p <= m) m = p;  // full factorial already meets any target

    FactorialDesignSpec spec;
    spec.p = p;
    spec.q = p - m;
    if (spec.q > 0) {
        const auto words = candidate_words(m, target_resolution == 3 ? 2 : 3,
                                           /*odd_only=*/target_resolution == 4);
        spec.generators.assign(words.begin(), words.begin() + spec.q);
    }

    AliasStructure aliases = alias_structure(spec);
    if (!aliases.full_factorial && aliases.resolution < target_resolution)
        throw ConstructionError("internal: constructed design fails its resolution target");
    DesignMatrix design = build_factorial_design(spec);
    return FractionalFactorial{std::move(design), std::move(spec), std::move(aliases)};
}

double wrap_around_discrepancy(const DesignMatrix& d) {
    if (d.coding() != Coding::unit_cube)
        throw DomainError("wrap-around discrepancy requires unit-cube coding");
    return wrap_discrepancy_from_matrix(d.values());
}

LhsResult optimize_lhs(int n, int p, int iterations, std::uint64_t seed) {
    if (n < 1 || p < 1) throw ConstructionError("LHS needs n >= 1 and p >= 1");
    if (iterations < 0) throw ConstructionError("iteration count must be >= 0");

    const auto sn = static_cast<std::size_t>(n);
    const auto sp = static_cast<std::size_t>(p);
    std::vector<double> mid(sn);
    for (std::size_t k = 0; k < sn; ++k)
        mid[k] = (2.0 * static_cast<double>(k) + 1.0) / (2.0 * static_cast<double>(n));

    Matrix x(sn, sp);
    for (std::size_t j = 0; j < sp; ++j) {
        Rng col_rng(seed, j + 1);
        const auto perm = col_rng.permutation(n);
        for (std::size_t i = 0; i < sn; ++i) x(i, j) = mid[static_cast<std::size_t>(perm[i])];
    }

    LhsResult out{DesignMatrix(x, Coding::unit_cube), 0.0, 0.0, {}};
    out.initial_discrepancy = wrap_discrepancy_from_matrix(x);
    out.best_trace.push_back(out.initial_discrepancy);
    if (n < 2 || iterations == 0) {
        out.final_discrepancy = out.initial_discrepancy;
        return out;
    }

    // Pair-factor matrix F(i,j) = prod_l wrap1(x_il, x_jl); a swap in column c
    // rescales one factor per affected pair, so a move costs O(n).
    std::vector<double> f(sn * sn, 0.0);
    auto recompute_f = [&]() {
        double total = 0.0;
        for (std::size_t i = 0; i < sn; ++i) {
            f[i * sn + i] = std::pow(1.5, static_cast<double>(p));
            total += f[i * sn + i];
            for (std::size_t j = i + 1; j < sn; ++j) {
                const double v = kernels::wrap_factor(x.row(i), x.row(j), sp);
                f[i * sn + j] = v;
                f[j * sn + i] = v;
                total += 2.0 * v;
            }
        }
        return total;
    };
    double sum_f = recompute_f();
    const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    const double base_term = -std::pow(4.0 / 3.0, static_cast<double>(p));
    double current = base_term + sum_f * inv_n2;

    Rng rng(seed, 0);
    std::vector<double> new_fa(sn), new_fb(sn);

    // Move delta in discrepancy units for a proposed swap of rows a,b in col c.
    auto move_delta = [&](std::size_t a, std::size_t b, std::size_t c) {
        const double xa = x(a, c);
        const double xb = x(b, c);
        double delta = 0.0;
        for (std::size_t j = 0; j < sn; ++j) {
            if (j == a || j == b) continue;
            const double xj = x(j, c);
            const double fa_old = wrap1(xa, xj);
            const double fb_old = wrap1(xb, xj);
            new_fa[j] = f[a * sn + j] * (fb_old / fa_old);
            new_fb[j] = f[b * sn + j] * (fa_old / fb_old);
            delta += (new_fa[j] - f[a * sn + j]) + (new_fb[j] - f[b * sn + j]);
        }
        return 2.0 * delta * inv_n2;
    };

    // Initial temperature from the observed move-delta scale.
    double t0 = 0.0;
    {
        const int probes = 64;
        int used = 0;
        for (int s = 0; s < probes; ++s) {
            const std::size_t c = rng.below(sp);
            const std::size_t a = rng.below(sn);
            std::size_t b = rng.below(sn);
            if (a == b) continue;
            t0 += std::fabs(move_delta(a, b, c));
            ++used;
        }
        t0 = used > 0 ? t0 / used : 1e-6;
        if (t0 <= 0.0) t0 = 1e-12;
    }
    const double cooling = std::pow(1e-3, 1.0 / static_cast<double>(iterations));

    Matrix best_x = x;
    double best = current;
    double temperature = t0;
    long long accepts_since_sync = 0;

    for (int it = 0; it < iterations; ++it, temperature *= cooling) {
        const std::size_t c = rng.below(sp);
        const std::size_t a = rng.below(sn);
        std::size_t b = rng.below(sn);
        if (a == b) continue;
        const double delta = move_delta(a, b, c);
        if (delta > 0.0 && rng.uniform() >= std::exp(-delta / temperature)) continue;

        for (std::size_t j = 0; j < sn; ++j) {
            if (j == a || j == b) continue;
            f[a * sn + j] = new_fa[j];
            f[j * sn + a] = new_fa[j];
            f[b * sn + j] = new_fb[j];
            f[j * sn + b] = new_fb[j];
        }
        std::swap(x(a, c), x(b, c));
        current += delta;
        if (++accepts_since_sync >= 20000) {
            sum_f = recompute_f();
            current = base_term + sum_f * inv_n2;
            accepts_since_sync = 0;
        }
        if (current < best) {
            best = current;
            best_x = x;
            out.best_trace.push_back(best);
        }
    }

    out.final_discrepancy = wrap_discrepancy_from_matrix(best_x);
    out.design = DesignMatrix(std::move(best_x), Coding::unit_cube);
    return out;
}

}  // namespace funscreen
