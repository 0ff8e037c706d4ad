#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sslab/error.hpp"
#include "sslab/rng.hpp"

namespace sslab {

/// Dense dictionary with unit-norm columns. Column m is atom D_m.
struct Dictionary {
    Eigen::MatrixXd atoms;  // P x M

    Eigen::Index signal_dim() const { return atoms.rows(); }
    Eigen::Index atom_count() const { return atoms.cols(); }
};

/// Matrix paired with a Dictionary; columns satisfy |W_m^t D_m| = 1.
struct AuxiliaryMatrix {
    Eigen::MatrixXd atoms;  // same shape as the paired dictionary
};

struct Signal {
    Eigen::VectorXd values;

    Eigen::Index dim() const { return values.size(); }
};

/// Nonnegative code with its support kept explicit. support is sorted and
/// holds exactly the strictly positive coordinates.
struct SparseCode {
    Eigen::VectorXd values;
    std::vector<Eigen::Index> support;

    static SparseCode from_values(Eigen::VectorXd v) {
        SparseCode c;
        for (Eigen::Index m = 0; m < v.size(); ++m) {
            if (v(m) < 0.0)
                throw std::invalid_argument("sparse code entries must be nonnegative");
            if (v(m) > 0.0) c.support.push_back(m);
        }
        c.values = std::move(v);
        return c;
    }

    static SparseCode zeros(Eigen::Index m) {
        SparseCode c;
        c.values = Eigen::VectorXd::Zero(m);
        return c;
    }

    Eigen::Index support_size() const { return static_cast<Eigen::Index>(support.size()); }
};

inline std::vector<Eigen::Index> support_of(const Eigen::VectorXd& v) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index m = 0; m < v.size(); ++m)
        if (v(m) > 0.0) s.push_back(m);
    return s;
}

/// Divides every column by its Euclidean norm. Throws ZeroColumn if a column
/// norm falls below 1e-300.
inline Dictionary normalize_columns(const Eigen::MatrixXd& raw) {
    Dictionary d;
    d.atoms = raw;
    for (Eigen::Index m = 0; m < raw.cols(); ++m) {
        const double nrm = raw.col(m).norm();
        if (!(nrm > 1e-300)) throw ZeroColumn(static_cast<long>(m));
        d.atoms.col(m) /= nrm;
    }
    return d;
}

/// Renormalizes each column of raw so that W_m^t D_m = 1 against the paired
/// dictionary (flips sign when the inner product is negative).
inline AuxiliaryMatrix normalize_against(const Eigen::MatrixXd& raw, const Dictionary& d) {
    if (raw.rows() != d.atoms.rows() || raw.cols() != d.atoms.cols())
        throw ShapeMismatch("auxiliary matrix must match dictionary dimensions");
    AuxiliaryMatrix w;
    w.atoms = raw;
    for (Eigen::Index m = 0; m < raw.cols(); ++m) {
        const double dot = raw.col(m).dot(d.atoms.col(m));
        if (std::abs(dot) < 1e-300)
            throw ZeroColumn(static_cast<long>(m));
        w.atoms.col(m) /= dot;
    }
    return w;
}

/// mu(D) = max_{m != m'} |D_m^t D_m'|.
inline double mutual_coherence(const Dictionary& d) {
    const Eigen::Index m_count = d.atom_count();
    if (m_count < 2) throw SingleAtom();
    const Eigen::MatrixXd gram = d.atoms.transpose() * d.atoms;
    double mu = 0.0;
    for (Eigen::Index i = 0; i < m_count; ++i)
        for (Eigen::Index j = i + 1; j < m_count; ++j)
            mu = std::max(mu, std::abs(gram(i, j)));
    return mu;
}

/// Cross coherence mu~ = max_{m != m'} |W_m'^t D_m|.
inline double cross_coherence(const AuxiliaryMatrix& w, const Dictionary& d) {
    if (w.atoms.rows() != d.atoms.rows() || w.atoms.cols() != d.atoms.cols())
        throw ShapeMismatch("cross coherence needs matching shapes");
    const Eigen::MatrixXd c = w.atoms.transpose() * d.atoms;  // c(m', m) = W_m'^t D_m
    double mu = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            if (i != j) mu = std::max(mu, std::abs(c(i, j)));
    return mu;
}

/// ||D^t D||_{2,2} by power iteration on the Gram matrix, relative tolerance
/// 1e-10, at most 10000 iterations. Seeded from the all-ones vector; restarts
/// once from a fixed pseudo-random vector if the iteration stagnates (the seed
/// can be orthogonal to the leading eigenvector).
inline double spectral_norm_sq(const Dictionary& d) {
    const Eigen::MatrixXd gram = d.atoms.transpose() * d.atoms;
    const Eigen::Index n = gram.rows();
    if (n == 1) return gram(0, 0);

    constexpr double rel_tol = 1e-10;
    constexpr int max_iters = 10000;

    Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = x.dot(gram * x);
    bool restarted = false;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = gram * x;
        const double ynorm = y.norm();
        if (ynorm < 1e-30 || (!restarted && it == max_iters / 2)) {
            Rng rng(0x55AB5EEDu);
            x = rng.normal_vector(n).normalized();
            lambda = x.dot(gram * x);
            restarted = true;
            continue;
        }
        x = y / ynorm;
        const double next = x.dot(gram * x);
        if (std::abs(next - lambda) <= rel_tol * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    throw NoConvergence("power iteration on the Gram matrix");
}

/// L(alpha) = 1/2 ||D alpha - beta||^2 + lambda * sum_m alpha(m).
/// The plain sum is the l1 norm because codes are nonnegative.
inline double lagrangian(const Dictionary& d, const Signal& beta, const SparseCode& alpha,
                         double lambda) {
    return 0.5 * (d.atoms * alpha.values - beta.values).squaredNorm() +
           lambda * alpha.values.sum();
}

inline double lagrangian(const Dictionary& d, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& alpha, double lambda) {
    return 0.5 * (d.atoms * alpha - beta).squaredNorm() + lambda * alpha.sum();
}

/// MSE(x, y) = ||x - y||^2 / ||x||^2.
inline double relative_mse(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double ref = x.squaredNorm();
    if (!(ref > 0.0)) throw ZeroReference();
    return (x - y).squaredNorm() / ref;
}

/// Zero-mean, unit-Euclidean-norm standardization used before coding.
inline Eigen::VectorXd standardize(const Eigen::VectorXd& v) {
    Eigen::VectorXd c = v.array() - v.mean();
    const double nrm = c.norm();
    if (nrm > 0.0) c /= nrm;
    return c;
}

}  // namespace sslab
