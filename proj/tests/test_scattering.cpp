#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>

#include "helpers.hpp"
#include "sslab/scattering.hpp"
#include "sslab/synthetic.hpp"

using namespace sslab;

namespace {

ScatteringConfig desk_config() {
    ScatteringConfig cfg;
    cfg.scale_exponent = 3;
    cfg.n_angles = 4;
    cfg.n_phases = 4;
    cfg.n_colors = 1;
    cfg.height = 32;
    cfg.width = 32;
    return cfg;
}

double frob(const std::vector<Eigen::MatrixXd>& channels) {
    double s = 0.0;
    for (const auto& ch : channels) s += ch.squaredNorm();
    return std::sqrt(s);
}

double frob_diff(const std::vector<Eigen::MatrixXd>& a,
                 const std::vector<Eigen::MatrixXd>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("every Morlet filter has near-zero spatial mean") {
    const WaveletBank bank = build_morlet_bank(desk_config());
    for (const auto& row : bank.psi) {
        for (const auto& filt : row) {
            const std::complex<double> mean = filt.sum();
            const double l1 = filt.cwiseAbs().sum();
            CHECK(std::abs(mean) <= 1e-6 * l1);
        }
    }
}

TEST_CASE("dilation relation against the analytic mother wavelet") {
    ScatteringConfig cfg;
    cfg.scale_exponent = 1;
    cfg.n_angles = 1;
    cfg.n_phases = 1;
    cfg.height = 32;
    cfg.width = 32;
    const WaveletBank bank = build_morlet_bank(cfg);
    const Eigen::MatrixXcd& filt = bank.psi[0][0];

    // analytic mother at scaled coordinates, continuous zero-mean constant
    constexpr double xi = 3.0 * M_PI / 4.0;
    constexpr double sigma = 0.8;
    const double kappa = std::exp(-xi * xi * sigma * sigma / 2.0);
    Eigen::MatrixXcd expected(32, 32);
    for (Eigen::Index r = 0; r < 32; ++r) {
        for (Eigen::Index c = 0; c < 32; ++c) {
            const double u1 = detail::wrapped_coord(c, 32) / 2.0;
            const double u2 = detail::wrapped_coord(r, 32) / 2.0;
            const std::complex<double> osc = std::polar(1.0, xi * u1);
            const double env = std::exp(-(u1 * u1 + u2 * u2) / (2.0 * sigma * sigma));
            expected(r, c) = 0.25 * (osc - kappa) * env;
        }
    }
    const double rel = (filt - expected).cwiseAbs().sum() / expected.cwiseAbs().sum();
    CHECK(rel < 0.05);
}

TEST_CASE("rotation by pi is a point reflection") {
    const Eigen::MatrixXcd f0 = morlet_filter(32, 32, 2, 0.0);
    const Eigen::MatrixXcd fpi = morlet_filter(32, 32, 2, M_PI);
    double max_diff = 0.0;
    for (Eigen::Index r = 0; r < 32; ++r)
        for (Eigen::Index c = 0; c < 32; ++c)
            max_diff = std::max(max_diff,
                                std::abs(fpi(r, c) - f0((32 - r) % 32, (32 - c) % 32)));
    CHECK(max_diff < 1e-10);
}

TEST_CASE("low pass is nonnegative with unit integral") {
    const WaveletBank bank = build_morlet_bank(desk_config());
    CHECK(bank.phi.minCoeff() >= 0.0);
    CHECK(bank.phi.sum() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("channel_count reproduces the published arithmetic") {
    ScatteringConfig cfg;
    cfg.scale_exponent = 4;
    cfg.n_angles = 8;
    cfg.n_phases = 4;
    cfg.n_colors = 3;
    cfg.height = 224;
    cfg.width = 224;
    CHECK(channel_count(cfg) == 1539);

    ScatteringConfig tiny;
    tiny.scale_exponent = 1;
    tiny.n_angles = 1;
    tiny.n_phases = 1;
    tiny.n_colors = 1;
    tiny.height = 2;
    tiny.width = 2;
    CHECK(channel_count(tiny) == 2);
}

TEST_CASE("channel_count agrees with direct tuple enumeration") {
    ScatteringConfig cfg;
    cfg.scale_exponent = 2;
    cfg.n_angles = 4;
    cfg.n_phases = 2;
    cfg.n_colors = 1;
    cfg.height = 16;
    cfg.width = 16;
    Eigen::Index count = 1;  // lowpass
    for (int j = 1; j <= cfg.scale_exponent; ++j)
        for (int t = 0; t < cfg.n_angles; ++t)
            for (int a = 0; a < cfg.n_phases; ++a) ++count;
    for (int j = 1; j <= cfg.scale_exponent; ++j)
        for (int t = 0; t < cfg.n_angles; ++t)
            for (int j2 = j + 1; j2 <= cfg.scale_exponent; ++j2)
                for (int t2 = 0; t2 < cfg.n_angles; ++t2) ++count;
    CHECK(count == 33);
    CHECK(channel_count(cfg) == count);
}

TEST_CASE("channel_count matches what scatter emits") {
    for (int j = 1; j <= 3; ++j) {
        ScatteringConfig cfg;
        cfg.scale_exponent = j;
        cfg.n_angles = 3;
        cfg.n_phases = 2;
        cfg.n_colors = 2;
        cfg.height = 16;
        cfg.width = 16;
        const WaveletBank bank = build_morlet_bank(cfg);
        Rng rng(50 + static_cast<std::uint64_t>(j));
        Image img;
        img.channels = {power_law_image(rng, 16, 16), power_law_image(rng, 16, 16)};
        const ScatteringOutput out = scatter(img, bank);
        CHECK(out.channel_dim() == channel_count(cfg));
        CHECK(out.descriptors.size() == out.channels.size());
    }
}

TEST_CASE("zero image scatters to zero") {
    const ScatteringConfig cfg = desk_config();
    const WaveletBank bank = build_morlet_bank(cfg);
    Image img;
    img.channels = {Eigen::MatrixXd::Zero(32, 32)};
    const ScatteringOutput out = scatter(img, bank);
    for (const auto& ch : out.channels) CHECK(ch.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant image kills wavelet channels and passes through the low pass") {
    const ScatteringConfig cfg = desk_config();
    const WaveletBank bank = build_morlet_bank(cfg);
    const double c = 0.7;
    Image img;
    img.channels = {Eigen::MatrixXd::Constant(32, 32, c)};
    const ScatteringOutput out = scatter(img, bank);
    for (std::size_t i = 0; i < out.channels.size(); ++i) {
        if (out.descriptors[i].kind == ChannelDescriptor::Kind::Lowpass) {
            CHECK((out.channels[i].array() - c).abs().maxCoeff() < 1e-12);
        } else {
            CHECK(out.channels[i].cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("grid-aligned shifts commute with scattering exactly") {
    const ScatteringConfig cfg = desk_config();
    const WaveletBank bank = build_morlet_bank(cfg);
    Rng rng(60);
    for (int trial = 0; trial < 3; ++trial) {
        Image img;
        img.channels = {power_law_image(rng, 32, 32)};
        Image shifted;
        shifted.channels = {circular_shift(img.channels[0], 8, 16)};  // 2^J = 8 multiples
        const ScatteringOutput a = scatter(img, bank);
        const ScatteringOutput b = scatter(shifted, bank);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < a.channels.size(); ++i) {
            const Eigen::MatrixXd expected = circular_shift(a.channels[i], 1, 2);
            max_diff = std::max(max_diff, (b.channels[i] - expected).cwiseAbs().maxCoeff());
        }
        CHECK(max_diff < 1e-10);
    }
}

TEST_CASE("wavelet channels are nonnegative, low pass is for nonnegative input") {
    const ScatteringConfig cfg = desk_config();
    const WaveletBank bank = build_morlet_bank(cfg);
    Rng rng(61);
    Image img;
    img.channels = {power_law_image(rng, 32, 32)};
    const ScatteringOutput out = scatter(img, bank);
    for (std::size_t i = 0; i < out.channels.size(); ++i) CHECK(out.channels[i].minCoeff() >= 0.0);
}

TEST_CASE("stored phase filters match the derivation inside scatter") {
    ScatteringConfig cfg = desk_config();
    cfg.n_phases = 3;
    const WaveletBank bank = build_morlet_bank(cfg);
    Rng rng(62);
    const Eigen::MatrixXd x = power_law_image(rng, 32, 32);
    const Eigen::MatrixXcd x_hat = detail::Fft2D::forward_real(x);

    const int j = 2, l = 1, a = 2;
    // route 1: convolution with the stored real filter psi_{j,theta,alpha}
    const Eigen::MatrixXd& real_filt = bank.psi_phase[j - 1][l][a];
    const Eigen::MatrixXd direct =
        detail::Fft2D::inverse(x_hat.cwiseProduct(detail::Fft2D::forward_real(real_filt)))
            .real();
    // route 2: phase-rotated complex convolution, as scatter computes it
    const Eigen::MatrixXcd y =
        detail::Fft2D::inverse(x_hat.cwiseProduct(detail::Fft2D::forward(bank.psi[j - 1][l])));
    const std::complex<double> rot = std::polar(1.0, -2.0 * M_PI * a / cfg.n_phases);
    const Eigen::MatrixXd derived = (rot * y.array()).real().matrix();
    CHECK((direct - derived).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sub-grid shift stability trend") {
    const ScatteringConfig cfg = desk_config();  // 2^J = 8
    const WaveletBank bank = build_morlet_bank(cfg);
    const std::vector<Eigen::Index> taus = {1, 2, 4};
    std::vector<std::vector<double>> rel_out(taus.size());
    std::vector<std::vector<double>> rel_img(taus.size());
    Rng rng(63);
    for (int trial = 0; trial < 20; ++trial) {
        Image img;
        img.channels = {power_law_image(rng, 32, 32)};
        const ScatteringOutput base = scatter(img, bank);
        const double base_norm = frob(base.channels);
        const double img_norm = img.channels[0].norm();
        for (std::size_t t = 0; t < taus.size(); ++t) {
            Image moved;
            moved.channels = {circular_shift(img.channels[0], 0, taus[t])};
            const ScatteringOutput s = scatter(moved, bank);
            rel_out[t].push_back(frob_diff(s.channels, base.channels) / base_norm);
            rel_img[t].push_back((moved.channels[0] - img.channels[0]).norm() / img_norm);
        }
    }
    const double out1 = testref::median(rel_out[0]);
    const double out2 = testref::median(rel_out[1]);
    const double out4 = testref::median(rel_out[2]);
    CHECK(out1 <= out2);
    CHECK(out2 <= out4);
    for (std::size_t t = 0; t < taus.size(); ++t)
        CHECK(testref::median(rel_out[t]) < testref::median(rel_img[t]));
}

TEST_CASE("PCA reduction recovers an exact low-dimensional structure") {
    // samples living in a 2-dimensional affine subspace of channel space
    Rng rng(70);
    const Eigen::Index channels = 6;
    const Eigen::VectorXd mean = rng.normal_vector(channels);
    const Eigen::MatrixXd basis = rng.normal_matrix(channels, 2);
    std::vector<ScatteringOutput> samples;
    for (int n = 0; n < 3; ++n) {
        ScatteringOutput s;
        s.channels.assign(static_cast<std::size_t>(channels), Eigen::MatrixXd(4, 4));
        for (Eigen::Index r = 0; r < 4; ++r) {
            for (Eigen::Index c = 0; c < 4; ++c) {
                const Eigen::VectorXd v = mean + basis * rng.normal_vector(2);
                for (Eigen::Index ch = 0; ch < channels; ++ch)
                    s.channels[static_cast<std::size_t>(ch)](r, c) = v(ch);
            }
        }
        samples.push_back(std::move(s));
    }
    const ReductionOperator op = fit_reduction(samples, 2);
    CHECK((op.projection * op.projection.transpose() - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-10);

    const auto reduced = apply_reduction(op, samples[0]);
    for (Eigen::Index r = 0; r < 4; ++r) {
        for (Eigen::Index c = 0; c < 4; ++c) {
            Eigen::VectorXd v(channels), y(2);
            for (Eigen::Index ch = 0; ch < channels; ++ch)
                v(ch) = samples[0].channels[static_cast<std::size_t>(ch)](r, c);
            for (Eigen::Index k = 0; k < 2; ++k)
                y(k) = reduced[static_cast<std::size_t>(k)](r, c);
            const Eigen::VectorXd recon = op.projection.transpose() * y + op.mean;
            CHECK((recon - v).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("full-dimensional reduction is an orthogonal transform") {
    Rng rng(71);
    std::vector<ScatteringOutput> samples(2);
    for (auto& s : samples) {
        s.channels.assign(5, Eigen::MatrixXd(3, 3));
        for (auto& ch : s.channels) ch = rng.normal_matrix(3, 3);
    }
    const ReductionOperator op = fit_reduction(samples, 5);
    CHECK((op.projection * op.projection.transpose() - Eigen::MatrixXd::Identity(5, 5))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    const auto reduced = apply_reduction(op, samples[1]);
    for (Eigen::Index r = 0; r < 3; ++r) {
        for (Eigen::Index c = 0; c < 3; ++c) {
            Eigen::VectorXd v(5), y(5);
            for (Eigen::Index ch = 0; ch < 5; ++ch) {
                v(ch) = samples[1].channels[static_cast<std::size_t>(ch)](r, c);
                y(ch) = reduced[static_cast<std::size_t>(ch)](r, c);
            }
            const Eigen::VectorXd recon = op.projection.transpose() * y + op.mean;
            CHECK((recon - v).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("captured variance matches an independent eigensolve") {
    Rng rng(72);
    const Eigen::Index channels = 12;
    std::vector<ScatteringOutput> samples(3);
    for (auto& s : samples) {
        s.channels.assign(static_cast<std::size_t>(channels), Eigen::MatrixXd(8, 8));
        for (auto& ch : s.channels) ch = rng.normal_matrix(8, 8);
    }
    const Eigen::Index target = channels / 6;
    const ReductionOperator op = fit_reduction(samples, target);

    // naive covariance, separate from the library's accumulation
    std::vector<Eigen::VectorXd> vecs;
    for (const auto& s : samples)
        for (Eigen::Index r = 0; r < 8; ++r)
            for (Eigen::Index c = 0; c < 8; ++c) {
                Eigen::VectorXd v(channels);
                for (Eigen::Index ch = 0; ch < channels; ++ch)
                    v(ch) = s.channels[static_cast<std::size_t>(ch)](r, c);
                vecs.push_back(v);
            }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(channels);
    for (const auto& v : vecs) mean += v;
    mean /= static_cast<double>(vecs.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(channels, channels);
    for (const auto& v : vecs) cov += (v - mean) * (v - mean).transpose();
    cov /= static_cast<double>(vecs.size());

    const auto eig = testref::jacobi_eigenvalues(cov);
    double top = 0.0;
    for (Eigen::Index k = 0; k < target; ++k) top += eig[static_cast<std::size_t>(k)];
    const double captured = (op.projection * cov * op.projection.transpose()).trace();
    CHECK(captured == Catch::Approx(top).epsilon(1e-8));
}

TEST_CASE("reduction of the zero tensor is the centered projection of the mean") {
    Rng rng(73);
    std::vector<ScatteringOutput> samples(2);
    for (auto& s : samples) {
        s.channels.assign(4, Eigen::MatrixXd(2, 2));
        for (auto& ch : s.channels) ch = rng.normal_matrix(2, 2).array() + 1.0;
    }
    const ReductionOperator op = fit_reduction(samples, 2);
    ScatteringOutput zero;
    zero.channels.assign(4, Eigen::MatrixXd::Zero(2, 2));
    const auto reduced = apply_reduction(op, zero);
    const Eigen::VectorXd expect = op.projection * (-op.mean);
    for (Eigen::Index k = 0; k < 2; ++k)
        CHECK((reduced[static_cast<std::size_t>(k)].array() - expect(k)).abs().maxCoeff() <
              1e-12);
}

TEST_CASE("fit_reduction needs enough pooled vectors") {
    std::vector<ScatteringOutput> samples(1);
    samples[0].channels.assign(8, Eigen::MatrixXd::Zero(2, 2));  // 4 vectors only
    CHECK_THROWS_AS(fit_reduction(samples, 6), InsufficientSamples);
}

TEST_CASE("tensor file and channel manifest round trip") {
    ScatteringConfig cfg;
    cfg.scale_exponent = 2;
    cfg.n_angles = 2;
    cfg.n_phases = 2;
    cfg.height = 16;
    cfg.width = 16;
    const WaveletBank bank = build_morlet_bank(cfg);
    Rng rng(74);
    Image img;
    img.channels = {power_law_image(rng, 16, 16)};
    const ScatteringOutput out = scatter(img, bank);

    save_tensor("scat_test.sstensor", out.channels);
    const auto back = load_tensor("scat_test.sstensor");
    REQUIRE(back.size() == out.channels.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK((back[i] - out.channels[i]).cwiseAbs().maxCoeff() == 0.0);

    write_channel_manifest("scat_test.manifest", out.descriptors);
    std::ifstream is("scat_test.manifest");
    std::string line;
    int lines = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++lines;
    CHECK(lines == channel_count(cfg));
    std::remove("scat_test.sstensor");
    std::remove("scat_test.manifest");
}

TEST_CASE("PGM round trip") {
    Rng rng(75);
    Image img;
    img.channels = {power_law_image(rng, 12, 10)};
    save_pnm("scat_test.pgm", img, 65535);
    const Image back = load_pnm("scat_test.pgm");
    REQUIRE(back.color_count() == 1);
    REQUIRE(back.height() == 12);
    REQUIRE(back.width() == 10);
    CHECK((back.channels[0] - img.channels[0]).cwiseAbs().maxCoeff() < 1.0 / 65535.0);
    std::remove("scat_test.pgm");
}
