#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sslab/error.hpp"
#include "sslab/fft.hpp"
#include "sslab/image_io.hpp"

namespace sslab {

struct ScatteringConfig {
    int scale_exponent = 3;  // J; scales j = 1..J
    int n_angles = 4;        // theta_l = l*pi/angles
    int n_phases = 4;        // alpha_a = 2*pi*a/phases
    int n_colors = 1;
    int height = 32;
    int width = 32;

    int stride() const { return 1 << scale_exponent; }

    void validate() const {
        if (scale_exponent < 1 || n_angles < 1 || n_phases < 1 || n_colors < 1)
            throw std::invalid_argument("scattering config counts must be positive");
        if (height % stride() != 0 || width % stride() != 0)
            throw std::invalid_argument("image dimensions must be divisible by 2^J");
    }
};

struct ChannelDescriptor {
    enum class Kind { Lowpass, Order1, Order2 };
    Kind kind = Kind::Lowpass;
    int color = 0;
    int j = 0, theta = 0, phase = 0;  // order 1
    int j2 = 0, theta2 = 0;           // order 2 partner

    std::string to_string() const {
        switch (kind) {
            case Kind::Lowpass:
                return "lowpass color=" + std::to_string(color);
            case Kind::Order1:
                return "order1 j=" + std::to_string(j) + " theta=" + std::to_string(theta) +
                       " phase=" + std::to_string(phase) + " color=" + std::to_string(color);
            case Kind::Order2:
                return "order2 j=" + std::to_string(j) + " theta=" + std::to_string(theta) +
                       " j2=" + std::to_string(j2) + " theta2=" + std::to_string(theta2) +
                       " color=" + std::to_string(color);
        }
        return {};
    }
};

/// Morlet filters psi_{j,theta} for j = 1..J, their real phase shifts, and the
/// Gaussian low pass phi_J, all sampled on the full periodic image grid.
struct WaveletBank {
    ScatteringConfig config;
    std::vector<std::vector<Eigen::MatrixXcd>> psi;                // [j-1][theta]
    std::vector<std::vector<std::vector<Eigen::MatrixXd>>> psi_phase;  // [j-1][theta][a]
    Eigen::MatrixXd phi;  // unit integral
};

/// One Morlet filter psi_{j,theta}(u) = 2^{-2j} (e^{i xi 2^{-j} (r_{-theta}u)_1} - kappa)
/// * gaussian(2^{-j} u), periodized over the grid. kappa is computed from the
/// discrete sums so the filter mean is zero to rounding. xi = 3*pi/4 and
/// sigma0 = 0.8 at the mother scale j = 0.
inline Eigen::MatrixXcd morlet_filter(int height, int width, int j, double theta) {
    constexpr double xi = 3.0 * M_PI / 4.0;
    constexpr double sigma0 = 0.8;
    const double scale = std::pow(2.0, static_cast<double>(j));
    const double xi_j = xi / scale;
    const double sigma_j = sigma0 * scale;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    Eigen::MatrixXcd osc_env(height, width);  // oscillation * envelope, periodized
    Eigen::MatrixXd env(height, width);
    std::complex<double> osc_sum(0.0, 0.0);
    double env_sum = 0.0;
    for (Eigen::Index r = 0; r < height; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) {
            std::complex<double> pe(0.0, 0.0);
            double ge = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const double u1 = detail::wrapped_coord(c, width) + dc * width;
                    const double u2 = detail::wrapped_coord(r, height) + dr * height;
                    const double rot1 = cos_t * u1 + sin_t * u2;  // (r_{-theta} u)_1
                    const double g =
                        std::exp(-(u1 * u1 + u2 * u2) / (2.0 * sigma_j * sigma_j));
                    pe += std::polar(g, xi_j * rot1);
                    ge += g;
                }
            }
            osc_env(r, c) = pe;
            env(r, c) = ge;
            osc_sum += pe;
            env_sum += ge;
        }
    }
    const std::complex<double> kappa = osc_sum / env_sum;
    return (osc_env - kappa * env.cast<std::complex<double>>()) / (scale * scale);
}

/// Periodized Gaussian low pass at scale 2^J, normalized to unit sum.
inline Eigen::MatrixXd gaussian_lowpass(int height, int width, int scale_exponent) {
    const double sigma = 0.8 * std::pow(2.0, static_cast<double>(scale_exponent));
    Eigen::MatrixXd phi(height, width);
    for (Eigen::Index r = 0; r < height; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) {
            double g = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const double u1 = detail::wrapped_coord(c, width) + dc * width;
                    const double u2 = detail::wrapped_coord(r, height) + dr * height;
                    g += std::exp(-(u1 * u1 + u2 * u2) / (2.0 * sigma * sigma));
                }
            }
            phi(r, c) = g;
        }
    }
    phi /= phi.sum();
    return phi;
}

inline WaveletBank build_morlet_bank(const ScatteringConfig& config) {
    config.validate();
    WaveletBank bank;
    bank.config = config;
    bank.psi.resize(static_cast<std::size_t>(config.scale_exponent));
    bank.psi_phase.resize(static_cast<std::size_t>(config.scale_exponent));
    for (int j = 1; j <= config.scale_exponent; ++j) {
        auto& row = bank.psi[static_cast<std::size_t>(j - 1)];
        auto& phase_row = bank.psi_phase[static_cast<std::size_t>(j - 1)];
        for (int l = 0; l < config.n_angles; ++l) {
            const double theta = M_PI * l / config.n_angles;
            Eigen::MatrixXcd filt = morlet_filter(config.height, config.width, j, theta);
            std::vector<Eigen::MatrixXd> phases;
            phases.reserve(static_cast<std::size_t>(config.n_phases));
            for (int a = 0; a < config.n_phases; ++a) {
                const std::complex<double> rot = std::polar(1.0, -2.0 * M_PI * a / config.n_phases);
                phases.push_back((rot * filt.array()).real().matrix());
            }
            row.push_back(std::move(filt));
            phase_row.push_back(std::move(phases));
        }
    }
    bank.phi = gaussian_lowpass(config.height, config.width, config.scale_exponent);
    return bank;
}

/// Channels emitted per image: n_colors * (1 + J*angles*phases + C(J,2)*angles^2).
inline Eigen::Index channel_count(const ScatteringConfig& config) {
    const Eigen::Index j = config.scale_exponent;
    const Eigen::Index t = config.n_angles;
    const Eigen::Index a = config.n_phases;
    return config.n_colors * (1 + j * t * a + (j * (j - 1) / 2) * t * t);
}

struct ScatteringOutput {
    std::vector<Eigen::MatrixXd> channels;  // each (H/2^J) x (W/2^J)
    std::vector<ChannelDescriptor> descriptors;

    Eigen::Index channel_dim() const { return static_cast<Eigen::Index>(channels.size()); }
};

namespace detail {

inline Eigen::MatrixXd subsample(const Eigen::MatrixXd& full, int stride) {
    Eigen::MatrixXd out(full.rows() / stride, full.cols() / stride);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = full(r * stride, c * stride);
    return out;
}

inline Eigen::MatrixXd clamp_tiny_negatives(Eigen::MatrixXd m) {
    // rectified/modulus quantities averaged by a nonnegative kernel are >= 0;
    // FFT rounding may leave ~1e-16 undershoots, anything worse is a bug and
    // is kept visible
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (m(r, c) < 0.0 && m(r, c) > -1e-9) m(r, c) = 0.0;
    return m;
}

}  // namespace detail

/// Order-1 coefficients rho(x * psi_{j,theta,alpha}) * phi_J, phase-invariant
/// order-2 coefficients ||x * psi_{j,theta}| * psi_{j',theta'}| * phi_J for
/// j' > j, and the low pass x * phi_J, all periodic and subsampled by 2^J.
inline ScatteringOutput scatter(const Image& x, const WaveletBank& bank) {
    const ScatteringConfig& cfg = bank.config;
    if (x.color_count() != cfg.n_colors) throw ShapeMismatch("image color count vs config");
    if (x.height() != cfg.height || x.width() != cfg.width)
        throw ShapeMismatch("image dimensions vs config");

    const int stride = cfg.stride();
    const Eigen::MatrixXcd phi_hat = detail::Fft2D::forward_real(bank.phi);
    std::vector<std::vector<Eigen::MatrixXcd>> psi_hat(bank.psi.size());
    for (std::size_t j = 0; j < bank.psi.size(); ++j)
        for (const auto& filt : bank.psi[j])
            psi_hat[j].push_back(detail::Fft2D::forward(filt));

    const auto lowpass_sub = [&](const Eigen::MatrixXd& img) {
        const Eigen::MatrixXcd full =
            detail::Fft2D::inverse(detail::Fft2D::forward_real(img).cwiseProduct(phi_hat));
        return detail::subsample(full.real(), stride);
    };

    ScatteringOutput out;
    for (int color = 0; color < cfg.n_colors; ++color) {
        const Eigen::MatrixXd& plane = x.channels[static_cast<std::size_t>(color)];
        const Eigen::MatrixXcd x_hat = detail::Fft2D::forward_real(plane);

        out.channels.push_back(lowpass_sub(plane));
        ChannelDescriptor low;
        low.kind = ChannelDescriptor::Kind::Lowpass;
        low.color = color;
        out.descriptors.push_back(low);

        // first wavelet layer; the modulus spectra feed the second order
        std::vector<std::vector<Eigen::MatrixXcd>> mod_hat(
            static_cast<std::size_t>(cfg.scale_exponent));
        for (int j = 1; j <= cfg.scale_exponent; ++j) {
            for (int l = 0; l < cfg.n_angles; ++l) {
                const Eigen::MatrixXcd y = detail::Fft2D::inverse(
                    x_hat.cwiseProduct(psi_hat[static_cast<std::size_t>(j - 1)]
                                              [static_cast<std::size_t>(l)]));
                for (int a = 0; a < cfg.n_phases; ++a) {
                    const std::complex<double> rot =
                        std::polar(1.0, -2.0 * M_PI * a / cfg.n_phases);
                    const Eigen::MatrixXd rectified =
                        (rot * y.array()).real().max(0.0).matrix();
                    out.channels.push_back(
                        detail::clamp_tiny_negatives(lowpass_sub(rectified)));
                    ChannelDescriptor d1;
                    d1.kind = ChannelDescriptor::Kind::Order1;
                    d1.color = color;
                    d1.j = j;
                    d1.theta = l;
                    d1.phase = a;
                    out.descriptors.push_back(d1);
                }
                mod_hat[static_cast<std::size_t>(j - 1)].push_back(
                    detail::Fft2D::forward_real(y.cwiseAbs()));
            }
        }

        for (int j = 1; j <= cfg.scale_exponent; ++j) {
            for (int l = 0; l < cfg.n_angles; ++l) {
                const Eigen::MatrixXcd& m_hat =
                    mod_hat[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(l)];
                for (int j2 = j + 1; j2 <= cfg.scale_exponent; ++j2) {
                    for (int l2 = 0; l2 < cfg.n_angles; ++l2) {
                        const Eigen::MatrixXcd z = detail::Fft2D::inverse(
                            m_hat.cwiseProduct(psi_hat[static_cast<std::size_t>(j2 - 1)]
                                                      [static_cast<std::size_t>(l2)]));
                        out.channels.push_back(
                            detail::clamp_tiny_negatives(lowpass_sub(z.cwiseAbs())));
                        ChannelDescriptor d2;
                        d2.kind = ChannelDescriptor::Kind::Order2;
                        d2.color = color;
                        d2.j = j;
                        d2.theta = l;
                        d2.j2 = j2;
                        d2.theta2 = l2;
                        out.descriptors.push_back(d2);
                    }
                }
            }
        }
    }
    return out;
}

/// Orthonormal per-position channel projection fitted by PCA.
struct ReductionOperator {
    Eigen::MatrixXd projection;  // target_dim x C, orthonormal rows
    Eigen::VectorXd mean;        // C
};

/// PCA over per-position channel vectors pooled across samples and positions.
inline ReductionOperator fit_reduction(const std::vector<ScatteringOutput>& samples,
                                       Eigen::Index target_dim) {
    if (samples.empty()) throw InsufficientSamples(0, target_dim);
    const Eigen::Index channels = samples.front().channel_dim();
    if (target_dim < 1 || target_dim > channels)
        throw std::invalid_argument("target dimension out of range");

    Eigen::Index n_vectors = 0;
    for (const auto& s : samples) {
        if (s.channel_dim() != channels) throw ShapeMismatch("samples disagree on channels");
        n_vectors += s.channels.front().size();
    }
    if (n_vectors < target_dim) throw InsufficientSamples(n_vectors, target_dim);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(channels);
    for (const auto& s : samples)
        for (Eigen::Index ch = 0; ch < channels; ++ch)
            mean(ch) += s.channels[static_cast<std::size_t>(ch)].sum();
    mean /= static_cast<double>(n_vectors);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(channels, channels);
    Eigen::VectorXd v(channels);
    for (const auto& s : samples) {
        const Eigen::Index rows = s.channels.front().rows();
        const Eigen::Index cols = s.channels.front().cols();
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                for (Eigen::Index ch = 0; ch < channels; ++ch)
                    v(ch) = s.channels[static_cast<std::size_t>(ch)](r, c) - mean(ch);
                cov.selfadjointView<Eigen::Lower>().rankUpdate(v);
            }
        }
    }
    cov /= static_cast<double>(n_vectors);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        cov.selfadjointView<Eigen::Lower>());
    ReductionOperator op;
    op.mean = std::move(mean);
    op.projection.resize(target_dim, channels);
    for (Eigen::Index k = 0; k < target_dim; ++k)
        op.projection.row(k) = eig.eigenvectors().col(channels - 1 - k).transpose();
    return op;
}

/// Centered projection applied independently at each spatial position.
inline std::vector<Eigen::MatrixXd> apply_reduction(const ReductionOperator& op,
                                                    const ScatteringOutput& s) {
    const Eigen::Index channels = s.channel_dim();
    if (op.projection.cols() != channels || op.mean.size() != channels)
        throw ShapeMismatch("reduction operator vs scattering channels");
    const Eigen::Index rows = s.channels.front().rows();
    const Eigen::Index cols = s.channels.front().cols();
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(op.projection.rows()),
                                     Eigen::MatrixXd(rows, cols));
    Eigen::VectorXd v(channels);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index ch = 0; ch < channels; ++ch)
                v(ch) = s.channels[static_cast<std::size_t>(ch)](r, c) - op.mean(ch);
            const Eigen::VectorXd y = op.projection * v;
            for (Eigen::Index k = 0; k < y.size(); ++k)
                out[static_cast<std::size_t>(k)](r, c) = y(k);
        }
    }
    return out;
}

/// Sidecar manifest: one "index<TAB>descriptor" line per channel.
inline void write_channel_manifest(const std::string& path,
                                   const std::vector<ChannelDescriptor>& descriptors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < descriptors.size(); ++i)
        os << i << '\t' << descriptors[i].to_string() << '\n';
}

}  // namespace sslab
