#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sslab/core.hpp"
#include "sslab/fft.hpp"
#include "sslab/image_io.hpp"
#include "sslab/rng.hpp"

namespace sslab {

/// Random image with a 1/f^exponent amplitude spectrum, rescaled to [0, 1].
/// Power-law spectra mimic natural image statistics.
inline Eigen::MatrixXd power_law_image(Rng& rng, int height, int width,
                                       double exponent = 1.0) {
    Eigen::MatrixXcd spectrum(height, width);
    for (Eigen::Index r = 0; r < height; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) {
            const double fr = detail::wrapped_coord(r, height) / height;
            const double fc = detail::wrapped_coord(c, width) / width;
            const double freq = std::sqrt(fr * fr + fc * fc);
            const double amp = freq > 0.0 ? std::pow(freq, -exponent) : 0.0;
            spectrum(r, c) = amp * std::complex<double>(rng.normal(), rng.normal());
        }
    }
    Eigen::MatrixXd img = detail::Fft2D::inverse(spectrum).real();
    const double lo = img.minCoeff();
    const double hi = img.maxCoeff();
    if (hi > lo) img = (img.array() - lo) / (hi - lo);
    return img;
}

/// Circular shift: out(r, c) = in((r - down) mod H, (c - right) mod W).
inline Eigen::MatrixXd circular_shift(const Eigen::MatrixXd& in, Eigen::Index down,
                                      Eigen::Index right) {
    const Eigen::Index h = in.rows(), w = in.cols();
    Eigen::MatrixXd out(h, w);
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < w; ++c)
            out(r, c) = in(((r - down) % h + h) % h, ((c - right) % w + w) % w);
    return out;
}

/// Two-class signals built from disjoint halves of a hidden dictionary:
/// class k draws positive combinations of atoms from half k, plus noise.
/// Signals are standardized to zero mean and unit norm.
struct ToyDataset {
    std::vector<Signal> signals;
    std::vector<int> labels;

    std::size_t size() const { return signals.size(); }
};

struct ToySplit {
    ToyDataset train;
    ToyDataset val;
};

/// Train and validation sets share one hidden dictionary drawn from the seed.
inline ToySplit make_toy_split(std::uint64_t seed, int n_train, int n_val,
                               int signal_dim = 16, int atom_count = 12, int support = 2,
                               double noise = 0.05) {
    Rng rng(seed);
    const Dictionary hidden =
        normalize_columns(rng.normal_matrix(signal_dim, atom_count));
    const int half = atom_count / 2;
    const auto draw = [&](int n, ToyDataset& out) {
        out.signals.reserve(static_cast<std::size_t>(n));
        out.labels.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int label = i % 2;  // balanced by construction
            Eigen::VectorXd code = Eigen::VectorXd::Zero(atom_count);
            for (const Eigen::Index p : rng.sample_without_replacement(half, support))
                code(label * half + p) = rng.uniform(0.5, 1.5);
            Eigen::VectorXd x = hidden.atoms * code + noise * rng.normal_vector(signal_dim);
            out.signals.push_back(Signal{standardize(x)});
            out.labels.push_back(label);
        }
    };
    ToySplit split;
    draw(n_train, split.train);
    draw(n_val, split.val);
    return split;
}

inline ToyDataset shuffle_labels(const ToyDataset& data, std::uint64_t seed) {
    ToyDataset out = data;
    Rng rng(seed);
    for (std::size_t i = out.labels.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(out.labels[i - 1], out.labels[j]);
    }
    return out;
}

}  // namespace sslab
