#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they cross-check.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace testref {

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending. Independent of any Eigen decomposition.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) < 1e-14 * scale) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

/// Minimizer of 1/2 (a - v)^2 + lambda * a over a >= 0 by grid search with two
/// refinement passes.
inline double grid_prox_coordinate(double v, double lambda) {
    double lo = 0.0;
    double hi = std::max(v, 0.0) + 1.0;
    double best = 0.0;
    const auto objective = [&](double a) { return 0.5 * (a - v) * (a - v) + lambda * a; };
    for (int pass = 0; pass < 3; ++pass) {
        double best_val = objective(lo);
        best = lo;
        const int steps = 4000;
        for (int i = 0; i <= steps; ++i) {
            const double a = lo + (hi - lo) * i / steps;
            const double val = objective(a);
            if (val < best_val) {
                best_val = val;
                best = a;
            }
        }
        const double width = (hi - lo) / steps;
        lo = std::max(0.0, best - 2.0 * width);
        hi = best + 2.0 * width;
    }
    return best;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testref
