#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sslab/core.hpp"
#include "sslab/error.hpp"
#include "sslab/prox_solvers.hpp"
#include "sslab/text.hpp"

namespace sslab {

/// A synthetic problem with known ground truth: beta = D alpha0 + residual,
/// ||beta - D alpha0|| <= residual_bound.
struct PlantedInstance {
    Dictionary dictionary;
    AuxiliaryMatrix auxiliary;
    SparseCode planted_code;  // alpha0
    Signal signal;            // beta
    double residual_bound = 0.0;

    void validate() const {
        if (planted_code.support_size() < 1)
            throw std::invalid_argument("planted code must have nonempty support");
        const double r = (signal.values - dictionary.atoms * planted_code.values).norm();
        if (r > residual_bound + 1e-12)
            throw std::invalid_argument("residual exceeds the stated bound");
    }
};

/// Evaluation of the exponential-convergence hypotheses on one instance.
struct Certificate {
    Eigen::Index s = 0;        // planted support size
    double mu_tilde = 0.0;     // cross coherence of (W, D)
    bool condition_holds = false;  // s * mu_tilde < 1/2
    double gamma = 0.0;
    double gamma_range_low = 1.0;   // open interval; empty iff !condition_holds
    double gamma_range_high = 0.0;  // (2 mu_tilde s)^-1, +inf when mu_tilde = 0
    double lambda_max = 0.0;
    bool lambda_max_ok = false;  // lambda_max >= ||W^t beta||_inf
    double lambda_floor = 0.0;   // +inf marks an unattainable floor
    std::vector<double> bound_curve;  // 2 lambda_max gamma^-n, n = 0..n_terms

    bool gamma_in_range() const {
        return condition_holds && gamma > gamma_range_low && gamma < gamma_range_high;
    }
    bool lambda_floor_attainable() const { return std::isfinite(lambda_floor); }
};

/// 2 * lambda_max * gamma^-n, the certified error envelope at iteration n.
inline double error_bound(double lambda_max, double gamma, int n) {
    return 2.0 * lambda_max * std::pow(gamma, -static_cast<double>(n));
}

inline Certificate certify(const PlantedInstance& instance, double gamma, double lambda_max,
                           int n_terms = 0) {
    if (!(gamma > 1.0)) throw GammaOutOfRange(gamma);
    instance.validate();

    Certificate c;
    c.s = instance.planted_code.support_size();
    c.mu_tilde = cross_coherence(instance.auxiliary, instance.dictionary);
    const double product = static_cast<double>(c.s) * c.mu_tilde;
    c.condition_holds = product < 0.5;
    c.gamma = gamma;
    c.gamma_range_low = 1.0;
    c.gamma_range_high = c.condition_holds
                             ? (product > 0.0 ? 1.0 / (2.0 * product)
                                              : std::numeric_limits<double>::infinity())
                             : 1.0;  // empty interval
    c.lambda_max = lambda_max;

    const Eigen::VectorXd wt_beta = instance.auxiliary.atoms.transpose() * instance.signal.values;
    c.lambda_max_ok = lambda_max >= wt_beta.lpNorm<Eigen::Infinity>();

    const Eigen::VectorXd residual =
        instance.signal.values - instance.dictionary.atoms * instance.planted_code.values;
    const double wt_residual_inf =
        (instance.auxiliary.atoms.transpose() * residual).lpNorm<Eigen::Infinity>();
    const double denom = 1.0 - 2.0 * gamma * product;
    c.lambda_floor =
        denom > 0.0 ? wt_residual_inf / denom : std::numeric_limits<double>::infinity();

    c.bound_curve.reserve(static_cast<std::size_t>(std::max(0, n_terms + 1)));
    for (int n = 0; n <= n_terms; ++n) c.bound_curve.push_back(error_bound(lambda_max, gamma, n));
    return c;
}

struct IterationCheck {
    int iter = 0;
    double lambda_n = 0.0;
    bool containment_ok = false;
    double linf = 0.0;
    double bound_two_lambda_n = 0.0;  // induction invariant, 2 lambda_n
    double bound_envelope = 0.0;      // 2 lambda_max gamma^-n
    bool linf_ok = false;
};

struct VerificationReport {
    bool passed = false;
    bool guaranteed = false;  // hypotheses held, so a failure falsifies the bound
    std::optional<int> first_violation_iter;
    std::string first_violation_kind;  // "containment" or "error_bound"
    std::vector<IterationCheck> checks;
};

/// Checks the induction invariants on a recorded trace: support containment
/// S(alpha_n) within S(alpha0) and ||alpha_n - alpha0||_inf <= 2 lambda_n at
/// every iteration. When the certificate's hypotheses fail the checks still
/// run, flagged as not guaranteed.
inline VerificationReport verify_trace(const PlantedInstance& instance,
                                       const ConvergenceTrace& trace,
                                       const Certificate& certificate) {
    if (trace.records.empty()) throw ScheduleMismatch("empty trace");
    if (trace.records.front().iter != 0)
        throw ScheduleMismatch("trace must start at iteration 0");

    constexpr double rel = 1e-9;
    for (const auto& r : trace.records) {
        const double expect = certificate.lambda_max *
                              std::pow(certificate.gamma, -static_cast<double>(r.iter));
        if (std::abs(r.lambda_n - expect) > rel * std::max(1.0, std::abs(expect)))
            throw ScheduleMismatch("trace threshold at iteration " + std::to_string(r.iter) +
                                   " does not follow lambda_max * gamma^-n");
        if (certificate.lambda_floor_attainable() &&
            r.lambda_n < certificate.lambda_floor * (1.0 - 1e-12))
            throw ScheduleMismatch("threshold below the certified floor at iteration " +
                                   std::to_string(r.iter));
        if (!r.linf_to_ref)
            throw ScheduleMismatch("trace was not recorded against the planted code");
    }

    VerificationReport report;
    report.guaranteed = certificate.condition_holds && certificate.gamma_in_range() &&
                        certificate.lambda_max_ok && certificate.lambda_floor_attainable();
    report.passed = true;

    const auto& planted_support = instance.planted_code.support;
    for (const auto& r : trace.records) {
        IterationCheck chk;
        chk.iter = r.iter;
        chk.lambda_n = r.lambda_n;
        chk.containment_ok = std::includes(planted_support.begin(), planted_support.end(),
                                           r.support.begin(), r.support.end());
        chk.linf = *r.linf_to_ref;
        chk.bound_two_lambda_n = 2.0 * r.lambda_n;
        chk.bound_envelope = error_bound(certificate.lambda_max, certificate.gamma, r.iter);
        chk.linf_ok = chk.linf <= chk.bound_two_lambda_n * (1.0 + 1e-12);
        if (report.passed && (!chk.containment_ok || !chk.linf_ok)) {
            report.passed = false;
            report.first_violation_iter = r.iter;
            report.first_violation_kind = !chk.containment_ok ? "containment" : "error_bound";
        }
        report.checks.push_back(chk);
    }
    return report;
}

/// Signed soft-threshold inequality |s_lambda(a1 + a2) - a1| <= lambda + |a2|,
/// with s_lambda(x) = sign(x) max(|x| - lambda, 0). Holds for every real
/// triple; a small slack absorbs rounding.
inline bool soft_threshold_inequality_probe(double alpha1, double alpha2, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    const double x = alpha1 + alpha2;
    const double soft = (x >= 0.0 ? 1.0 : -1.0) * std::max(std::abs(x) - lambda, 0.0);
    const double lhs = std::abs(soft - alpha1);
    const double rhs = lambda + std::abs(alpha2);
    return lhs <= rhs + 1e-12 * (1.0 + std::abs(alpha1) + std::abs(alpha2) + lambda);
}

/// Flat key-value certificate report, fixed key order.
inline void export_certificate(std::ostream& os, const Certificate& c) {
    os << "s = " << c.s << '\n';
    os << "mu_tilde = " << format_g17(c.mu_tilde) << '\n';
    os << "condition_holds = " << (c.condition_holds ? "true" : "false") << '\n';
    os << "gamma = " << format_g17(c.gamma) << '\n';
    if (c.condition_holds) {
        os << "gamma_range_low = " << format_g17(c.gamma_range_low) << '\n';
        os << "gamma_range_high = " << format_g17(c.gamma_range_high) << '\n';
    } else {
        os << "gamma_range = empty\n";
    }
    os << "gamma_in_range = " << (c.gamma_in_range() ? "true" : "false") << '\n';
    os << "lambda_max = " << format_g17(c.lambda_max) << '\n';
    os << "lambda_max_ok = " << (c.lambda_max_ok ? "true" : "false") << '\n';
    if (c.lambda_floor_attainable())
        os << "lambda_floor = " << format_g17(c.lambda_floor) << '\n';
    else
        os << "lambda_floor = unattainable\n";
    os << "bound_curve = ";
    for (std::size_t i = 0; i < c.bound_curve.size(); ++i) {
        if (i) os << ',';
        os << format_g17(c.bound_curve[i]);
    }
    os << '\n';
}

inline void export_certificate(const std::string& path, const Certificate& c) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    export_certificate(os, c);
}

}  // namespace sslab
