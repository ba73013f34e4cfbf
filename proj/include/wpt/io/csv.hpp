#pragma once

// Plain CSV for point clouds, fields and result tables. Numbers are written
// with 17 significant digits so a write/read round trip is exact.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wpt/errors.hpp"
#include "wpt/ot/coupling.hpp"
#include "wpt/types.hpp"

namespace wpt::io {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;  ///< empty when the file had none
    Matrix values;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    // ERANGE on underflow still yields the nearest subnormal; only overflow is fatal
    return end == s.c_str() + s.size() && !(errno == ERANGE && std::isinf(out));
}

}  // namespace detail

/// Numeric CSV with an optional header row (detected as a first row that does
/// not parse as numbers). Blank lines are skipped; ragged rows are errors.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    CsvTable t;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0, width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = detail::split(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t k = 0; k < cells.size(); ++k) numeric = numeric && detail::parse_number(cells[k], row[k]);
        if (!numeric) {
            if (rows.empty() && t.header.empty()) {
                t.header = cells;
                width = cells.size();
                continue;
            }
            throw InputError(path + ":" + std::to_string(lineno) + ": non-numeric value");
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
                             " columns, found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + ": no data rows");
    t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) t.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    if (!header.empty()) out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
    if (!out) throw InputError("failed writing " + path);
}

inline std::vector<std::string> numbered_header(const std::string& prefix, Index d) {
    std::vector<std::string> h;
    for (Index k = 0; k < d; ++k) h.push_back(prefix + std::to_string(k));
    return h;
}

/// Point cloud CSV: `x0,...,x{d-1}[,weight]`. Without a weight column (or
/// without a header) the weights are uniform.
inline PointCloud read_point_cloud(const std::string& path) {
    CsvTable t = read_csv(path);
    const bool weighted = !t.header.empty() && t.header.back() == "weight";
    if (weighted) {
        if (t.values.cols() < 2) throw InputError(path + ": weight column without coordinates");
        const Index d = t.values.cols() - 1;
        Vector w = t.values.col(d);
        Matrix X = t.values.leftCols(d);
        try {
            return {std::move(X), std::move(w)};
        } catch (const InputError& e) {
            throw InputError(path + ": " + e.what());
        }
    }
    try {
        return PointCloud::uniform(std::move(t.values));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

/// Writes the weight column only when the weights are not uniform.
inline void write_point_cloud(const std::string& path, const PointCloud& P) {
    auto header = numbered_header("x", P.dim());
    if (P.has_uniform_weights()) return write_csv(path, header, P.points());
    header.emplace_back("weight");
    Matrix M(P.size(), P.dim() + 1);
    M << P.points(), P.weights();
    write_csv(path, header, M);
}

/// Vector field CSV (header optional); rows align with an anchor cloud.
inline Matrix read_field(const std::string& path) { return read_csv(path).values; }

/// Dense plan, for debugging.
inline void write_coupling(const std::string& path, const Coupling& plan) {
    write_csv(path, numbered_header("t", plan.cols()), plan.dense());
}

}  // namespace wpt::io
