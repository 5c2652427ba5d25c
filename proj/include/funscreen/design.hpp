#pragma once

#include <string>
#include <vector>

#include "funscreen/matrix.hpp"

namespace funscreen {

// Two codings are supported: `factorial` designs hold exactly +-1 (two-level
// designs, replication allowed), `unit_cube` designs hold values in [0, 1]
// (space-filling designs).
enum class Coding { factorial, unit_cube };

class DesignMatrix {
public:
    DesignMatrix(Matrix m, Coding coding);

    std::size_t runs() const noexcept { return m_.rows(); }
    std::size_t factors() const noexcept { return m_.cols(); }
    Coding coding() const noexcept { return coding_; }
    const Matrix& values() const noexcept { return m_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

    // Column labels are V1..Vp throughout.
    static std::string factor_name(std::size_t j) { return "V" + std::to_string(j + 1); }
    std::vector<std::string> factor_names() const;

private:
    Matrix m_;
    Coding coding_;
};

// A 2^(p-q) fractional factorial: p factors, p-q base factors forming a full
// factorial, and q generator words assigning each added factor to a product
// of base columns. Words hold 0-based base-factor indices, strictly
// increasing. Word length >= 3 is required by the resolution-IV generator but
// not by this type; alias analysis accepts shorter words.
struct FactorialDesignSpec {
    int p = 0;
    int q = 0;
    std::vector<std::vector<int>> generators;

    int base_factors() const noexcept { return p - q; }
    void validate() const;
};

// Loads a design CSV; the coding is inferred (+-1 everywhere => factorial,
// otherwise values must lie in [0, 1]).
DesignMatrix load_design_matrix(const std::string& path, bool has_header);

}  // namespace funscreen
