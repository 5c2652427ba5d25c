#include "funscreen/design.hpp"

#include <algorithm>

#include "funscreen/csv.hpp"
#include "funscreen/error.hpp"

namespace funscreen {

DesignMatrix::DesignMatrix(Matrix m, Coding coding) : m_(std::move(m)), coding_(coding) {
    if (m_.rows() == 0 || m_.cols() == 0) throw DimensionError("design matrix is empty");
    if (!m_.all_finite()) throw DomainError("design matrix contains non-finite values");
    for (std::size_t i = 0; i < m_.rows(); ++i) {
        for (std::size_t j = 0; j < m_.cols(); ++j) {
            const double v = m_(i, j);
            if (coding_ == Coding::factorial) {
                if (v != 1.0 && v != -1.0)
                    throw DomainError("factorial design entry at run " + std::to_string(i + 1) +
                                      ", factor " + std::to_string(j + 1) + " is not +-1");
            } else {
                if (v < 0.0 || v > 1.0)
                    throw DomainError("unit-cube design entry at run " + std::to_string(i + 1) +
                                      ", factor " + std::to_string(j + 1) + " outside [0,1]");
            }
        }
    }
}

std::vector<std::string> DesignMatrix::factor_names() const {
    std::vector<std::string> names(factors());
    for (std::size_t j = 0; j < factors(); ++j) names[j] = factor_name(j);
    return names;
}

void FactorialDesignSpec::validate() const {
    if (p < 1) throw ConstructionError("factor count must be >= 1");
    if (q < 0 || q >= p) throw ConstructionError("generator count must satisfy 0 <= q < p");
    if (static_cast<int>(generators.size()) != q)
        throw ConstructionError("expected " + std::to_string(q) + " generator words, got " +
                                std::to_string(generators.size()));
    const int m = base_factors();
    for (const auto& word : generators) {
        if (word.empty()) throw ConstructionError("empty generator word");
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (word[i] < 0 || word[i] >= m)
                throw ConstructionError("generator word index " + std::to_string(word[i]) +
                                        " outside base factor range");
            if (i > 0 && word[i] <= word[i - 1])
                throw ConstructionError("generator word indices must be strictly increasing");
        }
    }
    for (std::size_t a = 0; a < generators.size(); ++a)
        for (std::size_t b = a + 1; b < generators.size(); ++b)
            if (generators[a] == generators[b])
                throw ConstructionError("duplicate generator word assigns two factors to one column");
}

DesignMatrix load_design_matrix(const std::string& path, bool has_header) {
    CsvTable t = read_csv(path, has_header);
    if (!t.values.all_finite())
        throw DomainError("design matrix '" + path + "' contains missing or non-finite values");
    bool all_pm1 = true;
    for (double v : t.values.data())
        if (v != 1.0 && v != -1.0) {
            all_pm1 = false;
            break;
        }
    return DesignMatrix(std::move(t.values), all_pm1 ? Coding::factorial : Coding::unit_cube);
}

}  // namespace funscreen
