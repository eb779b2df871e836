#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ckpca/errors.hpp"

namespace ckpca {

struct CsvMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> header;
    bool had_header = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace detail

/// Reads a comma-separated numeric matrix; a first row with any non-numeric
/// cell is treated as a header. Rows are observations.
inline CsvMatrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::vector<std::vector<double>> rows;
    CsvMatrix result;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], row[c])) {
                numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty() && !result.had_header) {
                result.had_header = true;
                for (const auto& c : cells) result.header.push_back(detail::trim(c));
                width = cells.size();
                continue;
            }
            throw ParseError("non-numeric cell at row " + std::to_string(line_no) +
                             ", column " + std::to_string(bad_col + 1));
        }
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw ParseError("row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw EmptyInput("no numeric rows in '" + path + "'");
    }
    result.values.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            result.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        }
    }
    return result;
}

/// Shortest round-trip decimal formatting, stable across runs.
inline std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    double parsed = 0.0;
    for (int precision = 15; precision <= 16; ++precision) {
        char probe[32];
        std::snprintf(probe, sizeof(probe), "%.*g", precision, v);
        std::sscanf(probe, "%lf", &parsed);
        if (parsed == v) return probe;
    }
    return std::string(buf, static_cast<std::size_t>(len));
}

inline void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& values,
                             const std::vector<std::string>& header = {}) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j > 0) out << ',';
            out << header[j];
        }
        out << '\n';
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(values(i, j));
        }
        out << '\n';
    }
}

}  // namespace ckpca
