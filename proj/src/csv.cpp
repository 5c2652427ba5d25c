#include "funscreen/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "funscreen/error.hpp"

namespace funscreen {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.emplace_back(trim(std::string_view(line).substr(start)));
            return out;
        }
        out.emplace_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
}

bool parse_token(std::string_view tok, double& out) {
    if (tok == "NA" || tok == "nan" || tok == "NaN") {
        out = std::nan("");
        return true;
    }
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !tok.empty();
}

bool line_is_numeric(const std::string& line) {
    double v = 0.0;
    for (const auto& tok : split_fields(line))
        if (!parse_token(tok, v)) return false;
    return true;
}

}  // namespace

double parse_double(const std::string& token, std::size_t row, std::size_t col) {
    double v = 0.0;
    if (!parse_token(token, v))
        throw FormatError("cannot parse '" + token + "' as a number at row " +
                          std::to_string(row) + ", column " + std::to_string(col));
    return v;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw FormatError("value not representable");
    return std::string(buf, ptr);
}

bool csv_sniff_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        return !line_is_numeric(line);
    }
    return false;
}

CsvTable read_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    std::vector<std::vector<double>> rows;
    bool header_pending = has_header;

    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (header_pending) {
            table.header.assign(fields.begin(), fields.end());
            width = fields.size();
            header_pending = false;
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            throw FormatError("row at line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(width) + " in '" + path + "'");
        std::vector<double> parsed(width);
        for (std::size_t j = 0; j < width; ++j) parsed[j] = parse_double(fields[j], lineno, j + 1);
        rows.push_back(std::move(parsed));
    }
    if (rows.empty()) throw FormatError("no data rows in '" + path + "'");
    table.values = Matrix::from_rows(rows);
    return table;
}

void write_csv(const std::string& path, const Matrix& values,
               const std::vector<std::string>& header) {
    std::ostringstream out;
    if (!header.empty()) {
        if (header.size() != values.cols())
            throw DimensionError("header has " + std::to_string(header.size()) +
                                 " fields, data has " + std::to_string(values.cols()) +
                                 " columns");
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j != 0) out << ',';
            out << header[j];
        }
        out << '\n';
    }
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j != 0) out << ',';
            out << format_double(values(i, j));
        }
        out << '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const std::string body = out.str();
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace funscreen
