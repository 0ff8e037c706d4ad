#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sslab/certify.hpp"
#include "sslab/core.hpp"
#include "sslab/error.hpp"
#include "sslab/matrix_io.hpp"
#include "sslab/rng.hpp"
#include "sslab/text.hpp"

namespace sslab {

struct ProblemSpec {
    Eigen::Index signal_dim = 16;   // P
    Eigen::Index atom_count = 12;   // M
    Eigen::Index support_size = 2;  // s
    double noise_level = 0.0;       // sigma
    double coef_low = 0.5;
    double coef_high = 1.5;
    std::uint64_t seed = 0;
    bool require_certified = false;  // resample until s * mu(D) < 1/2
    int max_retries = 1000;

    void validate() const {
        if (support_size < 1 || support_size > std::min(signal_dim, atom_count))
            throw std::invalid_argument("support size out of range");
        if (noise_level < 0.0) throw std::invalid_argument("noise level must be nonnegative");
        if (!(coef_low > 0.0) || coef_low > coef_high)
            throw std::invalid_argument("coefficient range must satisfy 0 < low <= high");
    }
};

/// Draws D from a unit-normalized Gaussian ensemble, plants a positive code on
/// a uniform support, and sets beta = D alpha0 + sigma * (unit-norm noise).
/// W defaults to D. With require_certified, resamples D until s * mu(D) < 1/2.
inline PlantedInstance generate_planted(const ProblemSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
        Dictionary d = normalize_columns(rng.normal_matrix(spec.signal_dim, spec.atom_count));
        if (spec.require_certified) {
            const double mu = spec.atom_count >= 2 ? mutual_coherence(d) : 0.0;
            if (static_cast<double>(spec.support_size) * mu >= 0.5) continue;
        }
        Eigen::VectorXd code = Eigen::VectorXd::Zero(spec.atom_count);
        for (const Eigen::Index m :
             rng.sample_without_replacement(spec.atom_count, spec.support_size))
            code(m) = rng.uniform(spec.coef_low, spec.coef_high);

        PlantedInstance inst;
        inst.signal.values = d.atoms * code;
        if (spec.noise_level > 0.0)
            inst.signal.values +=
                spec.noise_level * rng.normal_vector(spec.signal_dim).normalized();
        inst.auxiliary.atoms = d.atoms;
        inst.dictionary = std::move(d);
        inst.planted_code = SparseCode::from_values(std::move(code));
        inst.residual_bound = spec.noise_level;
        inst.validate();
        return inst;
    }
    throw CertificationUnreachable("coherence target s*mu(D) < 1/2 not met within " +
                                   std::to_string(spec.max_retries) + " resamples");
}

/// KKT conditions of the positive l1 Lagrangian at tolerance tol:
/// active coordinates have |D_m^t(D alpha - beta) + lambda| <= tol, inactive
/// ones have D_m^t(D alpha - beta) + lambda >= -tol.
inline bool kkt_check(const Dictionary& d, const Signal& beta, const Eigen::VectorXd& alpha,
                      double lambda_star, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const Eigen::VectorXd grad =
        d.atoms.transpose() * (d.atoms * alpha - beta.values) +
        Eigen::VectorXd::Constant(d.atom_count(), lambda_star);
    for (Eigen::Index m = 0; m < alpha.size(); ++m) {
        if (alpha(m) > 0.0) {
            if (std::abs(grad(m)) > tol) return false;
        } else {
            if (grad(m) < -tol) return false;
        }
    }
    return true;
}

inline bool kkt_check(const Dictionary& d, const Signal& beta, const SparseCode& alpha,
                      double lambda_star, double tol) {
    return kkt_check(d, beta, alpha.values, lambda_star, tol);
}

namespace detail {

// Lexicographic combination walk over {0..n-1}, size k.
inline bool next_combination(std::vector<Eigen::Index>& comb, Eigen::Index n) {
    const auto k = static_cast<Eigen::Index>(comb.size());
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        if (comb[static_cast<std::size_t>(i)] < n - k + i) {
            ++comb[static_cast<std::size_t>(i)];
            for (Eigen::Index j = i + 1; j < k; ++j)
                comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Global minimizer of the positive l1 Lagrangian by support enumeration.
/// Supports are visited smallest first, lexicographic within a size, and the
/// first feasible point satisfying the full KKT conditions is returned; by
/// convexity that point is the global optimum and the visit order implements
/// the tie-break. Sub-problems solve the normal equations with a 1e-12 ridge
/// fallback on degenerate Grams.
inline SparseCode exact_positive_lasso(const Dictionary& d, const Signal& beta,
                                       double lambda_star, Eigen::Index max_support) {
    const Eigen::Index m_count = d.atom_count();
    if (m_count > 20) throw TooManyAtoms(static_cast<long>(m_count));
    if (beta.dim() != d.signal_dim()) throw ShapeMismatch("signal vs dictionary");
    max_support = std::min(max_support, m_count);

    const double scale =
        std::max({1.0, (d.atoms.transpose() * beta.values).lpNorm<Eigen::Infinity>(),
                  lambda_star});
    const double accept_tol = 1e-10 * scale;

    for (Eigen::Index k = 0; k <= max_support; ++k) {
        if (k == 0) {
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m_count);
            if (kkt_check(d, beta, zero, lambda_star, accept_tol))
                return SparseCode::zeros(m_count);
            continue;
        }
        std::vector<Eigen::Index> comb(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
        do {
            Eigen::MatrixXd ds(d.signal_dim(), k);
            for (Eigen::Index i = 0; i < k; ++i)
                ds.col(i) = d.atoms.col(comb[static_cast<std::size_t>(i)]);
            const Eigen::MatrixXd gram = ds.transpose() * ds;
            const Eigen::VectorXd rhs =
                ds.transpose() * beta.values - Eigen::VectorXd::Constant(k, lambda_star);

            Eigen::VectorXd coeffs = gram.ldlt().solve(rhs);
            if ((gram * coeffs - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * scale) {
                const Eigen::MatrixXd ridged =
                    gram + 1e-12 * Eigen::MatrixXd::Identity(k, k);
                coeffs = ridged.ldlt().solve(rhs);
            }
            if ((coeffs.array() <= 0.0).any()) continue;

            Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_count);
            for (Eigen::Index i = 0; i < k; ++i)
                alpha(comb[static_cast<std::size_t>(i)]) = coeffs(i);
            if (kkt_check(d, beta, alpha, lambda_star, accept_tol))
                return SparseCode::from_values(std::move(alpha));
        } while (detail::next_combination(comb, m_count));
    }
    throw NoKKTPoint();
}

/// Auxiliary matrix with deliberately large cross coherence against d,
/// normalized to W_m^t D_m = 1. The perturbation scale doubles until
/// s * mu~ reaches target_product.
inline AuxiliaryMatrix adversarial_auxiliary(const Dictionary& d, Eigen::Index s,
                                             double target_product, Rng& rng) {
    const Eigen::MatrixXd noise = rng.normal_matrix(d.signal_dim(), d.atom_count());
    double scale = 1.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        AuxiliaryMatrix w = normalize_against(d.atoms + scale * noise, d);
        if (static_cast<double>(s) * cross_coherence(w, d) >= target_product) return w;
        scale *= 2.0;
    }
    throw CertificationUnreachable("could not reach the adversarial coherence target");
}

/// Instance files: core binary matrices plus a flat text sidecar so a run can
/// be reproduced exactly.
inline void save_instance(const std::string& base_path, const PlantedInstance& inst,
                          const ProblemSpec& spec, double lambda_star) {
    save_matrix(base_path + ".dict.sslab", inst.dictionary.atoms);
    save_matrix(base_path + ".aux.sslab", inst.auxiliary.atoms);
    save_matrix(base_path + ".signal.sslab", inst.signal.values);
    save_matrix(base_path + ".code.sslab", inst.planted_code.values);
    std::ofstream os(base_path + ".spec.txt", std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + base_path + ".spec.txt");
    os << "seed = " << spec.seed << '\n';
    os << "signal_dim = " << spec.signal_dim << '\n';
    os << "atom_count = " << spec.atom_count << '\n';
    os << "support_size = " << spec.support_size << '\n';
    os << "noise_level = " << format_g17(spec.noise_level) << '\n';
    os << "coef_low = " << format_g17(spec.coef_low) << '\n';
    os << "coef_high = " << format_g17(spec.coef_high) << '\n';
    os << "require_certified = " << (spec.require_certified ? "true" : "false") << '\n';
    os << "lambda = " << format_g17(lambda_star) << '\n';
}

inline PlantedInstance load_instance(const std::string& base_path, double noise_level) {
    PlantedInstance inst;
    inst.dictionary.atoms = load_matrix(base_path + ".dict.sslab");
    inst.auxiliary.atoms = load_matrix(base_path + ".aux.sslab");
    inst.signal.values = load_matrix(base_path + ".signal.sslab");
    inst.planted_code = SparseCode::from_values(load_matrix(base_path + ".code.sslab"));
    inst.residual_bound = noise_level;
    inst.validate();
    return inst;
}

}  // namespace sslab
