#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funscreen/matrix.hpp"

namespace funscreen {

// CSV dialect used everywhere: comma separator, '.' decimal point, optional
// single header line, UTF-8, no quoting. Missing values are the literal "NA"
// (read back as NaN). Doubles are written in shortest round-trip form, so
// load -> write -> load is bit-identical.

struct CsvTable {
    std::vector<std::string> header;  // empty when the file has no header
    Matrix values;
};

CsvTable read_csv(const std::string& path, bool has_header);

// Peeks at the first line: returns true when it does not parse as numbers.
bool csv_sniff_header(const std::string& path);

void write_csv(const std::string& path, const Matrix& values,
               const std::vector<std::string>& header = {});

// Shortest decimal form that parses back to exactly v; NaN becomes "NA".
std::string format_double(double v);

// Strict parse of a full token; position (1-based row/col) feeds error text.
double parse_double(const std::string& token, std::size_t row, std::size_t col);

}  // namespace funscreen
