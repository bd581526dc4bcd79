#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdet/dataset.hpp"

namespace cdet {

namespace detail {

inline std::string trim_ws(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim_ws(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

struct LoadResult {
    Dataset data;
    std::vector<long> skipped_rows;  // 1-based data row numbers
};

/// Reads a comma-separated table with a header row, selecting response and
/// covariate columns by name. Rows with a missing or non-numeric selected
/// cell are excluded and reported by row number.
inline LoadResult load_table(const std::string& path,
                             const std::vector<std::string>& response_cols,
                             const std::vector<std::string>& covariate_cols) {
    if (response_cols.empty() || covariate_cols.empty())
        throw std::invalid_argument("load_table: response and covariate columns must be named");
    for (const auto& r : response_cols)
        for (const auto& c : covariate_cols)
            if (r == c)
                throw std::invalid_argument("load_table: column '" + r +
                                            "' used as both response and covariate");

    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_table: empty file " + path);
    const auto header = detail::split_csv_line(line);

    auto column_of = [&](const std::string& name) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw std::runtime_error("load_table: column '" + name + "' not found in " + path);
    };
    std::vector<std::size_t> r_idx, c_idx;
    for (const auto& name : response_cols) r_idx.push_back(column_of(name));
    for (const auto& name : covariate_cols) c_idx.push_back(column_of(name));

    std::vector<std::vector<double>> rows;
    LoadResult result;
    long row_number = 0;
    while (std::getline(in, line)) {
        ++row_number;
        if (detail::trim_ws(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(r_idx.size() + c_idx.size());
        bool ok = true;
        for (const auto idx_set : {&r_idx, &c_idx}) {
            for (std::size_t j : *idx_set) {
                double v = 0.0;
                if (j >= cells.size() || !detail::parse_double(cells[j], v)) {
                    ok = false;
                    break;
                }
                row.push_back(v);
            }
            if (!ok) break;
        }
        if (ok)
            rows.push_back(std::move(row));
        else
            result.skipped_rows.push_back(row_number);
    }
    if (rows.empty()) throw std::runtime_error("load_table: no usable rows in " + path);

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    result.data.y.resize(n, static_cast<Eigen::Index>(r_idx.size()));
    result.data.x.resize(n, static_cast<Eigen::Index>(c_idx.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < r_idx.size(); ++j)
            result.data.y(i, static_cast<Eigen::Index>(j)) = row[j];
        for (std::size_t j = 0; j < c_idx.size(); ++j)
            result.data.x(i, static_cast<Eigen::Index>(j)) = row[r_idx.size() + j];
    }
    return result;
}

/// Writes a dataset as CSV with default column names y1..yp, x1..xd at
/// full double precision, so a written table reloads without loss.
inline void write_table(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_table: cannot open " + path);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << (j ? "," : "") << 'y' << (j + 1);
    for (Eigen::Index j = 0; j < data.d(); ++j) out << ",x" << (j + 1);
    out << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.y(i, j));
            out << (j ? "," : "") << buf;
        }
        for (Eigen::Index j = 0; j < data.d(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace cdet
