#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sslab/core.hpp"
#include "sslab/error.hpp"
#include "sslab/text.hpp"

namespace sslab {

/// Geometric threshold sequence lambda_n = lambda_max * (lambda_max/lambda_star)^(-n/N)
/// for n = 1..N, with decay ratio gamma = (lambda_max/lambda_star)^(1/N).
struct ThresholdSchedule {
    double lambda_max = 0.0;
    double lambda_star = 0.0;
    int n_layers = 0;
    double gamma = 0.0;
    std::vector<double> thresholds;  // thresholds[n-1] = lambda_n

    double threshold(int n) const { return thresholds[static_cast<std::size_t>(n - 1)]; }
};

inline ThresholdSchedule make_schedule(double lambda_max, double lambda_star, int n_layers) {
    if (!(lambda_star > 0.0) || !(lambda_max > 0.0))
        throw BadRange("thresholds must be positive");
    if (lambda_star > lambda_max)
        throw BadRange("lambda_star must not exceed lambda_max");
    if (n_layers < 1) throw BadRange("need at least one layer");
    if (lambda_star == lambda_max)
        throw BadRange("degenerate schedule (gamma = 1); constant-threshold iteration is ISTA");
    ThresholdSchedule s;
    s.lambda_max = lambda_max;
    s.lambda_star = lambda_star;
    s.n_layers = n_layers;
    const double ratio = lambda_max / lambda_star;
    s.gamma = std::pow(ratio, 1.0 / n_layers);
    s.thresholds.resize(static_cast<std::size_t>(n_layers));
    for (int n = 1; n <= n_layers; ++n)
        s.thresholds[static_cast<std::size_t>(n - 1)] =
            lambda_max * std::pow(ratio, -static_cast<double>(n) / n_layers);
    return s;
}

struct SolverConfig {
    std::optional<double> step_size;  // ISTA/FISTA; default 0.99 / ||D^tD||
    int n_iterations = 12;
    bool record_trace = true;
    bool record_codes = false;  // keep per-iteration code snapshots in the trace
};

struct TraceRecord {
    int iter = 0;
    double lambda_n = 0.0;  // prox threshold applied at this iteration (row 0: virtual)
    double lagrangian = 0.0;
    Eigen::Index support_size = 0;
    std::vector<Eigen::Index> support;
    std::optional<double> linf_to_ref;
};

struct ConvergenceTrace {
    std::vector<TraceRecord> records;
    std::vector<Eigen::VectorXd> codes;  // only when record_codes was set

    const TraceRecord& back() const { return records.back(); }
};

/// prox_lambda(v) = max(v - lambda, 0) elementwise; the minimizer of
/// 1/2 ||alpha - v||^2 + lambda * sum(alpha) over alpha >= 0.
inline Eigen::VectorXd positive_prox(const Eigen::VectorXd& v, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("prox threshold must be nonnegative");
    return (v.array() - lambda).max(0.0).matrix();
}

/// Pre-activation of one thresholding layer: alpha + W^t (beta - D alpha) - lambda.
/// Shared by the homotopy solvers and the unrolled network so their outputs
/// agree bitwise.
inline Eigen::VectorXd istc_preactivation(const Eigen::MatrixXd& w, const Eigen::MatrixXd& d,
                                          const Eigen::VectorXd& beta,
                                          const Eigen::VectorXd& alpha, double lambda) {
    Eigen::VectorXd p = alpha + w.transpose() * (beta - d * alpha);
    p.array() -= lambda;
    return p;
}

namespace detail {

inline void record_row(ConvergenceTrace& trace, const SolverConfig& cfg, int iter,
                       double lambda_n, const Dictionary& d, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& alpha, double lambda_objective,
                       const Eigen::VectorXd* reference) {
    if (!cfg.record_trace) return;
    TraceRecord r;
    r.iter = iter;
    r.lambda_n = lambda_n;
    r.lagrangian = lagrangian(d, beta, alpha, lambda_objective);
    r.support = support_of(alpha);
    r.support_size = static_cast<Eigen::Index>(r.support.size());
    if (reference) r.linf_to_ref = (alpha - *reference).lpNorm<Eigen::Infinity>();
    trace.records.push_back(std::move(r));
    if (cfg.record_codes) trace.codes.push_back(alpha);
}

inline std::pair<SparseCode, ConvergenceTrace> run_istc(const Eigen::MatrixXd& w,
                                                        const Dictionary& d,
                                                        const Signal& beta,
                                                        const ThresholdSchedule& schedule,
                                                        const SolverConfig& cfg,
                                                        const Eigen::VectorXd* reference) {
    if (w.rows() != d.atoms.rows() || w.cols() != d.atoms.cols())
        throw ShapeMismatch("auxiliary matrix vs dictionary");
    if (beta.dim() != d.signal_dim()) throw ShapeMismatch("signal vs dictionary");

    ConvergenceTrace trace;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d.atom_count());
    // Row 0 carries the virtual pre-iteration threshold lambda_0 = lambda_max.
    record_row(trace, cfg, 0, schedule.lambda_max, d, beta.values, alpha,
               schedule.lambda_star, reference);
    for (int n = 1; n <= schedule.n_layers; ++n) {
        const double lambda_n = schedule.threshold(n);
        alpha = istc_preactivation(w, d.atoms, beta.values, alpha, lambda_n)
                    .cwiseMax(0.0);
        record_row(trace, cfg, n, lambda_n, d, beta.values, alpha, schedule.lambda_star,
                   reference);
    }
    return {SparseCode::from_values(std::move(alpha)), std::move(trace)};
}

inline double resolve_step(const Dictionary& d, const SolverConfig& cfg) {
    const double bound = 1.0 / spectral_norm_sq(d);
    const double eps = cfg.step_size.value_or(0.99 * bound);
    if (!(eps > 0.0)) throw StepTooLarge(eps, bound);
    if (eps >= bound) throw StepTooLarge(eps, bound);
    return eps;
}

}  // namespace detail

/// ISTA for the positive l1 Lagrangian, initialized at zero:
/// alpha_{n+1} = prox(alpha_n + eps D^t (beta - D alpha_n), eps*lambda_star).
inline std::pair<SparseCode, ConvergenceTrace> solve_ista(
    const Dictionary& d, const Signal& beta, double lambda_star, const SolverConfig& cfg,
    const Eigen::VectorXd* reference = nullptr) {
    if (beta.dim() != d.signal_dim()) throw ShapeMismatch("signal vs dictionary");
    const double eps = detail::resolve_step(d, cfg);
    const double thr = eps * lambda_star;

    ConvergenceTrace trace;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d.atom_count());
    detail::record_row(trace, cfg, 0, thr, d, beta.values, alpha, lambda_star, reference);
    for (int n = 1; n <= cfg.n_iterations; ++n) {
        const Eigen::VectorXd grad_step =
            alpha + eps * (d.atoms.transpose() * (beta.values - d.atoms * alpha));
        alpha = positive_prox(grad_step, thr);
        detail::record_row(trace, cfg, n, thr, d, beta.values, alpha, lambda_star, reference);
    }
    return {SparseCode::from_values(std::move(alpha)), std::move(trace)};
}

/// FISTA with the standard momentum sequence t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2;
/// the trace is recorded on the alpha iterates, not the extrapolated points.
inline std::pair<SparseCode, ConvergenceTrace> solve_fista(
    const Dictionary& d, const Signal& beta, double lambda_star, const SolverConfig& cfg,
    const Eigen::VectorXd* reference = nullptr) {
    if (beta.dim() != d.signal_dim()) throw ShapeMismatch("signal vs dictionary");
    const double eps = detail::resolve_step(d, cfg);
    const double thr = eps * lambda_star;

    ConvergenceTrace trace;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d.atom_count());
    Eigen::VectorXd y = alpha;
    double t = 1.0;
    detail::record_row(trace, cfg, 0, thr, d, beta.values, alpha, lambda_star, reference);
    for (int n = 1; n <= cfg.n_iterations; ++n) {
        const Eigen::VectorXd grad_step =
            y + eps * (d.atoms.transpose() * (beta.values - d.atoms * y));
        const Eigen::VectorXd alpha_next = positive_prox(grad_step, thr);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = alpha_next + ((t - 1.0) / t_next) * (alpha_next - alpha);
        alpha = alpha_next;
        t = t_next;
        detail::record_row(trace, cfg, n, thr, d, beta.values, alpha, lambda_star, reference);
    }
    return {SparseCode::from_values(std::move(alpha)), std::move(trace)};
}

/// Homotopy iterated soft thresholding, one unit-step iteration per threshold:
/// alpha_n = prox(alpha_{n-1} + D^t (beta - D alpha_{n-1}), lambda_n).
inline std::pair<SparseCode, ConvergenceTrace> solve_istc(
    const Dictionary& d, const Signal& beta, const ThresholdSchedule& schedule,
    const SolverConfig& cfg = {}, const Eigen::VectorXd* reference = nullptr) {
    return detail::run_istc(d.atoms, d, beta, schedule, cfg, reference);
}

/// Same iteration with an auxiliary matrix W in place of D^t. With W = D this
/// reproduces solve_istc bit for bit (identical operation order).
inline std::pair<SparseCode, ConvergenceTrace> solve_generalized_istc(
    const Dictionary& d, const AuxiliaryMatrix& w, const Signal& beta,
    const ThresholdSchedule& schedule, const SolverConfig& cfg = {},
    const Eigen::VectorXd* reference = nullptr) {
    return detail::run_istc(w.atoms, d, beta, schedule, cfg, reference);
}

enum class SolverKind { Ista, Fista, Istc, GeneralizedIstc };

struct SolveRequest {
    SolverKind kind = SolverKind::Istc;
    double lambda_star = 0.0;                   // ISTA / FISTA objective weight
    SolverConfig config;                        // step, iterations, tracing
    std::optional<ThresholdSchedule> schedule;  // homotopy variants
};

/// Runs one request over a list of signals sharing the dictionary. Outputs are
/// in input order and identical to sequential solves; per-problem failures are
/// rethrown with the problem index attached.
inline std::vector<std::pair<SparseCode, ConvergenceTrace>> batch_solve(
    const Dictionary& d, const AuxiliaryMatrix* w, const std::vector<Signal>& betas,
    const SolveRequest& req, const std::vector<Eigen::VectorXd>* references = nullptr) {
    if (references && references->size() != betas.size())
        throw ShapeMismatch("reference list vs problem list");
    std::vector<std::pair<SparseCode, ConvergenceTrace>> out;
    out.reserve(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const Eigen::VectorXd* ref = references ? &(*references)[i] : nullptr;
        try {
            switch (req.kind) {
                case SolverKind::Ista:
                    out.push_back(solve_ista(d, betas[i], req.lambda_star, req.config, ref));
                    break;
                case SolverKind::Fista:
                    out.push_back(solve_fista(d, betas[i], req.lambda_star, req.config, ref));
                    break;
                case SolverKind::Istc:
                    out.push_back(solve_istc(d, betas[i], req.schedule.value(), req.config, ref));
                    break;
                case SolverKind::GeneralizedIstc:
                    if (!w) throw ShapeMismatch("generalized ISTC needs an auxiliary matrix");
                    out.push_back(
                        solve_generalized_istc(d, *w, betas[i], req.schedule.value(), req.config, ref));
                    break;
            }
        } catch (const std::exception& e) {
            throw BatchItemError(i, e.what());
        }
    }
    return out;
}

/// Trace CSV: iter,lambda_n,lagrangian,support_size,linf_to_ref with 17
/// significant digits; linf_to_ref is empty when no reference was supplied.
inline void export_trace_csv(const std::string& path, const ConvergenceTrace& trace) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os << "iter,lambda_n,lagrangian,support_size,linf_to_ref\n";
    for (const auto& r : trace.records) {
        os << r.iter << ',' << format_g17(r.lambda_n) << ',' << format_g17(r.lagrangian) << ','
           << r.support_size << ',';
        if (r.linf_to_ref) os << format_g17(*r.linf_to_ref);
        os << '\n';
    }
}

}  // namespace sslab
