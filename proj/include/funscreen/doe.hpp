#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "funscreen/design.hpp"

namespace funscreen {

// Alias summary of a two-level fractional factorial, derived from the full
// defining relation (all 2^q - 1 products of the generator words).
struct AliasStructure {
    bool full_factorial = false;  // q == 0: no defining words, no aliasing
    int resolution = 0;           // minimum defining word length; 0 when full
    std::map<int, long long> word_length_pattern;

    // Aliases of each main effect with other mains / two-factor interactions
    // (defining words of length 2 and 3). Empty at resolution >= IV.
    std::vector<std::vector<int>> main_with_main;
    std::vector<std::vector<std::pair<int, int>>> main_with_pair;

    std::string resolution_label() const;  // "full", "III", "IV", ... or a number
};

struct FractionalFactorial {
    DesignMatrix design;
    FactorialDesignSpec spec;
    AliasStructure aliases;
};

// Expands a spec into its +-1 design: base factor j alternates in blocks of
// 2^j (first column fastest), added factors are products of base columns.
DesignMatrix build_factorial_design(const FactorialDesignSpec& spec);

// Certifies the design by enumerating the entire defining relation.
AliasStructure alias_structure(const FactorialDesignSpec& spec);

// Smallest-run-count design with p factors meeting the target resolution
// (3 or 4). Construction is deterministic; the seed is accepted for interface
// stability but unused. Added factors take odd-length words (descending
// length, lexicographic within a length), which certifies resolution IV for
// every p up to the capacity bound p <= n/2.
FractionalFactorial generate_fractional_factorial(int p, int target_resolution,
                                                  std::uint64_t seed);

// Squared wrap-around L2 discrepancy of a unit-cube design.
double wrap_around_discrepancy(const DesignMatrix& d);

struct LhsResult {
    DesignMatrix design;
    double initial_discrepancy = 0.0;
    double final_discrepancy = 0.0;
    // Best discrepancy seen after each improving accepted move; non-increasing.
    std::vector<double> best_trace;
};

// Midpoint Latin hypercube (each column a permutation of (2k-1)/(2n))
// improved by within-column pair swaps under simulated annealing. The
// returned design is the best one visited, so its discrepancy never exceeds
// the initial one.
LhsResult optimize_lhs(int n, int p, int iterations, std::uint64_t seed);

}  // namespace funscreen
