#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sslab/error.hpp"
#include "sslab/text.hpp"

// Binary matrix format: 8-byte magic "SSLAB001", two u64 little-endian dims
// (P, M), then P*M f64 little-endian values in column-major order.

namespace sslab {

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64_le(os, bits);
}

inline double read_f64_le(std::istream& is) {
    const std::uint64_t bits = read_u64_le(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace detail

inline constexpr char kMatrixMagic[9] = "SSLAB001";

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os.write(kMatrixMagic, 8);
    detail::write_u64_le(os, static_cast<std::uint64_t>(m.rows()));
    detail::write_u64_le(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) detail::write_f64_le(os, m(r, c));
    if (!os) throw Error("write failed: " + path);
}

inline Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMatrixMagic, 8) != 0)
        throw Error("bad magic in " + path);
    const auto rows = static_cast<Eigen::Index>(detail::read_u64_le(is));
    const auto cols = static_cast<Eigen::Index>(detail::read_u64_le(is));
    if (rows < 1 || cols < 1 || rows > (1 << 24) || cols > (1 << 24))
        throw Error("implausible dimensions in " + path);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = detail::read_f64_le(is);
    if (!is) throw Error("truncated file: " + path);
    return m;
}

/// CSV export, one column per atom, header row "atom_0,atom_1,...".
inline void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) os << ',';
        os << "atom_" << c;
    }
    os << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) os << ',';
            os << format_g17(m(r, c));
        }
        os << '\n';
    }
}

inline Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open: " + path);
    std::string header;
    if (!std::getline(is, header)) throw Error("empty CSV: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t cols = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (cols == 0)
            cols = row.size();
        else if (row.size() != cols)
            throw Error("ragged CSV row in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty() || cols == 0) throw Error("no data rows in " + path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

}  // namespace sslab
