#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sslab/error.hpp"
#include "sslab/matrix_io.hpp"

namespace sslab {

/// Multichannel image; channel matrices are H x W with values usually in [0, 1].
struct Image {
    std::vector<Eigen::MatrixXd> channels;

    Eigen::Index height() const { return channels.empty() ? 0 : channels.front().rows(); }
    Eigen::Index width() const { return channels.empty() ? 0 : channels.front().cols(); }
    Eigen::Index color_count() const { return static_cast<Eigen::Index>(channels.size()); }
};

inline constexpr char kTensorMagic[9] = "SSIMG001";

/// Raw tensor file: magic "SSIMG001", u64 ndim, ndim u64 dims, then f64
/// little-endian values; a (C, H, W) tensor iterates channel, then row, then
/// column fastest.
inline void save_tensor(const std::string& path, const std::vector<Eigen::MatrixXd>& channels) {
    if (channels.empty()) throw Error("refusing to write an empty tensor: " + path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os.write(kTensorMagic, 8);
    detail::write_u64_le(os, 3);
    detail::write_u64_le(os, channels.size());
    detail::write_u64_le(os, static_cast<std::uint64_t>(channels.front().rows()));
    detail::write_u64_le(os, static_cast<std::uint64_t>(channels.front().cols()));
    for (const auto& ch : channels) {
        if (ch.rows() != channels.front().rows() || ch.cols() != channels.front().cols())
            throw ShapeMismatch("tensor channels must share dimensions");
        for (Eigen::Index r = 0; r < ch.rows(); ++r)
            for (Eigen::Index c = 0; c < ch.cols(); ++c) detail::write_f64_le(os, ch(r, c));
    }
    if (!os) throw Error("write failed: " + path);
}

inline std::vector<Eigen::MatrixXd> load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kTensorMagic, 8) != 0) throw Error("bad magic in " + path);
    const auto ndim = detail::read_u64_le(is);
    if (ndim != 3) throw Error("expected a 3-dimensional tensor in " + path);
    const auto n_channels = static_cast<Eigen::Index>(detail::read_u64_le(is));
    const auto rows = static_cast<Eigen::Index>(detail::read_u64_le(is));
    const auto cols = static_cast<Eigen::Index>(detail::read_u64_le(is));
    if (n_channels < 1 || rows < 1 || cols < 1 || n_channels > (1 << 20) ||
        rows > (1 << 20) || cols > (1 << 20))
        throw Error("implausible dimensions in " + path);
    std::vector<Eigen::MatrixXd> channels(static_cast<std::size_t>(n_channels));
    for (auto& ch : channels) {
        ch.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) ch(r, c) = detail::read_f64_le(is);
    }
    if (!is) throw Error("truncated file: " + path);
    return channels;
}

namespace detail {

inline int pnm_next_int(std::istream& is) {
    // skips whitespace and '#' comments per the PNM header grammar
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == EOF) throw Error("unexpected end of PNM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = is.get();
    }
    return value;
}

}  // namespace detail

/// Binary PGM (P5) and PPM (P6); samples are scaled to [0, 1].
inline Image load_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    char p = 0, kind = 0;
    is.get(p);
    is.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6')) throw Error("not a binary PGM/PPM: " + path);
    const int width = detail::pnm_next_int(is);
    const int height = detail::pnm_next_int(is);
    const int maxval = detail::pnm_next_int(is);
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
        throw Error("bad PNM header in " + path);
    const int n_channels = kind == '5' ? 1 : 3;
    const bool wide = maxval > 255;

    Image img;
    img.channels.assign(static_cast<std::size_t>(n_channels),
                        Eigen::MatrixXd(height, width));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            for (int ch = 0; ch < n_channels; ++ch) {
                int v;
                if (wide) {
                    const int hi = is.get(), lo = is.get();
                    v = (hi << 8) | lo;
                } else {
                    v = is.get();
                }
                if (v < 0) throw Error("truncated PNM data in " + path);
                img.channels[static_cast<std::size_t>(ch)](r, c) =
                    static_cast<double>(v) / maxval;
            }
        }
    }
    return img;
}

inline void save_pnm(const std::string& path, const Image& img, int maxval = 255) {
    if (img.channels.size() != 1 && img.channels.size() != 3)
        throw ShapeMismatch("PNM supports 1 or 3 channels");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os << (img.channels.size() == 1 ? "P5" : "P6") << '\n'
       << img.width() << ' ' << img.height() << '\n'
       << maxval << '\n';
    for (Eigen::Index r = 0; r < img.height(); ++r) {
        for (Eigen::Index c = 0; c < img.width(); ++c) {
            for (const auto& ch : img.channels) {
                const double clamped = std::clamp(ch(r, c), 0.0, 1.0);
                const int v = static_cast<int>(std::lround(clamped * maxval));
                if (maxval > 255) os.put(static_cast<char>((v >> 8) & 0xFF));
                os.put(static_cast<char>(v & 0xFF));
            }
        }
    }
}

}  // namespace sslab
