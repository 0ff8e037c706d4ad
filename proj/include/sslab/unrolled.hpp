#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sslab/core.hpp"
#include "sslab/error.hpp"
#include "sslab/matrix_io.hpp"
#include "sslab/prox_solvers.hpp"
#include "sslab/rng.hpp"
#include "sslab/synthetic.hpp"
#include "sslab/text.hpp"

namespace sslab {

enum class LambdaMaxPolicy {
    DataDependent,  // ||W^t beta||_inf per sample, treated as a constant
    Fixed,
};

/// Trainable state of the unrolled thresholding network. lambda_star is
/// parametrized through its logarithm so gradient steps keep it positive.
struct UnrolledParams {
    Eigen::MatrixXd dictionary;  // D, unit columns
    Eigen::MatrixXd auxiliary;   // W; unused when tied
    bool tied = true;            // W is D, one set of gradients
    double log_lambda_star = std::log(0.1);
    LambdaMaxPolicy lambda_max_policy = LambdaMaxPolicy::DataDependent;
    double fixed_lambda_max = 1.0;
    int n_layers = 12;

    const Eigen::MatrixXd& w() const { return tied ? dictionary : auxiliary; }
    double lambda_star() const { return std::exp(log_lambda_star); }
    Eigen::Index signal_dim() const { return dictionary.rows(); }
    Eigen::Index code_dim() const { return dictionary.cols(); }
};

/// Everything the reverse pass needs: pre-activations locate the active set of
/// each ReLU; codes feed the bilinear terms.
struct ForwardCache {
    Eigen::VectorXd beta;
    double lambda_max = 0.0;
    bool degenerate_schedule = false;  // lambda_max clamped to lambda_star
    std::vector<double> thresholds;    // lambda_1..lambda_N
    std::vector<Eigen::VectorXd> preacts;  // p_1..p_N
    std::vector<Eigen::VectorXd> codes;    // alpha_0..alpha_N
};

namespace detail {

struct ResolvedSchedule {
    std::vector<double> thresholds;
    double lambda_max = 0.0;
    bool degenerate = false;
};

inline ResolvedSchedule unrolled_thresholds(const UnrolledParams& params,
                                            const Eigen::VectorXd& beta) {
    const double lambda_star = params.lambda_star();
    const double lambda_max = params.lambda_max_policy == LambdaMaxPolicy::DataDependent
                                  ? (params.w().transpose() * beta).lpNorm<Eigen::Infinity>()
                                  : params.fixed_lambda_max;
    if (params.n_layers == 0) return {{}, lambda_max, false};
    if (!(lambda_max > lambda_star)) {
        // weakly correlated sample; fall back to a constant-threshold cascade
        return {std::vector<double>(static_cast<std::size_t>(params.n_layers), lambda_star),
                lambda_star, true};
    }
    return {make_schedule(lambda_max, lambda_star, params.n_layers).thresholds, lambda_max,
            false};
}

}  // namespace detail

/// Runs the N-layer cascade alpha_n = rho(alpha_{n-1} + W^t(beta - D alpha_{n-1}) - lambda_n).
/// Numerically identical to solve_generalized_istc under the schedule implied
/// by the lambda_max policy.
inline std::pair<SparseCode, ForwardCache> unrolled_forward(const UnrolledParams& params,
                                                            const Signal& beta) {
    if (beta.dim() != params.signal_dim()) throw ShapeMismatch("signal vs unrolled params");
    ForwardCache cache;
    cache.beta = beta.values;
    detail::ResolvedSchedule resolved = detail::unrolled_thresholds(params, beta.values);
    cache.thresholds = std::move(resolved.thresholds);
    cache.lambda_max = resolved.lambda_max;
    cache.degenerate_schedule = resolved.degenerate;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(params.code_dim());
    cache.codes.push_back(alpha);
    for (int n = 1; n <= params.n_layers; ++n) {
        Eigen::VectorXd p =
            istc_preactivation(params.w(), params.dictionary, beta.values, alpha,
                               cache.thresholds[static_cast<std::size_t>(n - 1)]);
        alpha = p.cwiseMax(0.0);
        cache.preacts.push_back(std::move(p));
        cache.codes.push_back(alpha);
    }
    return {SparseCode::from_values(std::move(alpha)), std::move(cache)};
}

struct UnrolledGradients {
    Eigen::MatrixXd d_dictionary;
    Eigen::MatrixXd d_auxiliary;  // zero when tied (folded into d_dictionary)
    double d_log_lambda_star = 0.0;
};

/// Exact reverse-mode derivative of unrolled_forward. The ReLU subgradient at
/// zero is taken as zero; the data-dependent lambda_max is a constant by
/// policy, so no gradient flows through it.
inline UnrolledGradients unrolled_backward(const ForwardCache& cache,
                                           const UnrolledParams& params,
                                           const Eigen::VectorXd& grad_wrt_code) {
    const auto n_layers = static_cast<int>(cache.preacts.size());
    if (n_layers != params.n_layers || cache.codes.size() != cache.preacts.size() + 1)
        throw CacheMismatch("layer count");
    if (grad_wrt_code.size() != params.code_dim()) throw CacheMismatch("code dimension");

    UnrolledGradients g;
    g.d_dictionary = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());
    g.d_auxiliary = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());
    const Eigen::MatrixXd& w = params.w();

    Eigen::VectorXd grad = grad_wrt_code;
    for (int n = n_layers; n >= 1; --n) {
        const Eigen::VectorXd& p = cache.preacts[static_cast<std::size_t>(n - 1)];
        const Eigen::VectorXd& alpha_prev = cache.codes[static_cast<std::size_t>(n - 1)];
        const Eigen::VectorXd dp =
            (p.array() > 0.0).select(grad, Eigen::VectorXd::Zero(grad.size()));

        // d lambda_n / d log lambda_star: (n/N) lambda_n on the geometric
        // schedule, lambda_star itself on the clamped constant one
        const double lambda_n = cache.thresholds[static_cast<std::size_t>(n - 1)];
        const double dlambda_dlog =
            cache.degenerate_schedule ? lambda_n
                                      : lambda_n * static_cast<double>(n) / params.n_layers;
        g.d_log_lambda_star -= dlambda_dlog * dp.sum();

        const Eigen::VectorXd residual = cache.beta - params.dictionary * alpha_prev;
        const Eigen::VectorXd w_dp = w * dp;
        g.d_auxiliary += residual * dp.transpose();
        g.d_dictionary -= w_dp * alpha_prev.transpose();
        grad = dp - params.dictionary.transpose() * w_dp;
    }
    if (params.tied) {
        g.d_dictionary += g.d_auxiliary;
        g.d_auxiliary.setZero();
    }
    return g;
}

/// Central finite differences over every scalar parameter (D, W when untied,
/// log lambda_star).
inline UnrolledGradients finite_diff_gradient(
    const std::function<double(const UnrolledParams&)>& loss_fn, const UnrolledParams& params,
    double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    UnrolledGradients g;
    g.d_dictionary = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());
    g.d_auxiliary = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());

    UnrolledParams probe = params;
    const auto central = [&](double& slot) {
        const double saved = slot;
        slot = saved + step;
        const double hi = loss_fn(probe);
        slot = saved - step;
        const double lo = loss_fn(probe);
        slot = saved;
        return (hi - lo) / (2.0 * step);
    };

    for (Eigen::Index c = 0; c < params.code_dim(); ++c)
        for (Eigen::Index r = 0; r < params.signal_dim(); ++r)
            g.d_dictionary(r, c) = central(probe.dictionary(r, c));
    if (!params.tied)
        for (Eigen::Index c = 0; c < params.code_dim(); ++c)
            for (Eigen::Index r = 0; r < params.signal_dim(); ++r)
                g.d_auxiliary(r, c) = central(probe.auxiliary(r, c));
    g.d_log_lambda_star = central(probe.log_lambda_star);
    return g;
}

/// Linear softmax head on the sparse code.
struct ToyClassifier {
    Eigen::MatrixXd weights;  // K x M
    Eigen::VectorXd bias;     // K

    static ToyClassifier init(Eigen::Index classes, Eigen::Index code_dim, Rng& rng) {
        ToyClassifier c;
        c.weights = 0.01 * rng.normal_matrix(classes, code_dim);
        c.bias = Eigen::VectorXd::Zero(classes);
        return c;
    }

    Eigen::Index predict(const Eigen::VectorXd& code) const {
        Eigen::Index best = 0;
        (weights * code + bias).maxCoeff(&best);
        return best;
    }
};

struct ClassifierGrads {
    double loss = 0.0;
    Eigen::VectorXd d_code;
    Eigen::MatrixXd d_weights;
    Eigen::VectorXd d_bias;
};

inline ClassifierGrads softmax_cross_entropy(const ToyClassifier& clf,
                                             const Eigen::VectorXd& code, int label) {
    const Eigen::VectorXd logits = clf.weights * code + clf.bias;
    const double zmax = logits.maxCoeff();
    const Eigen::VectorXd expz = (logits.array() - zmax).exp();
    const Eigen::VectorXd prob = expz / expz.sum();

    ClassifierGrads out;
    out.loss = -std::log(std::max(prob(label), 1e-300));
    Eigen::VectorXd delta = prob;
    delta(label) -= 1.0;
    out.d_code = clf.weights.transpose() * delta;
    out.d_weights = delta * code.transpose();
    out.d_bias = delta;
    return out;
}

struct TrainConfig {
    int epochs = 50;
    double learning_rate = 0.05;
    int batch_size = 10;
    std::uint64_t seed = 0;
    int start_epoch = 0;  // for resumed runs
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double mean_sparsity = 0.0;  // mean fraction of nonzero code entries on val
    // post-step projection quality, recorded for the invariant checks
    double max_atom_norm_error = 0.0;
    double max_pairing_error = 0.0;
};

struct TrainResult {
    UnrolledParams params;
    ToyClassifier classifier;
    std::vector<EpochMetrics> metrics;
};

namespace detail {

inline void project_parameters(UnrolledParams& params) {
    // skip the division when already normalized to rounding, so a zero-size
    // step leaves parameters bitwise intact
    for (Eigen::Index m = 0; m < params.code_dim(); ++m) {
        const double nrm = params.dictionary.col(m).norm();
        if (!(nrm > 1e-300)) throw ZeroColumn(static_cast<long>(m));
        if (std::abs(nrm - 1.0) > 1e-13) params.dictionary.col(m) /= nrm;
    }
    if (params.tied) return;
    for (Eigen::Index m = 0; m < params.code_dim(); ++m) {
        const double dot = params.auxiliary.col(m).dot(params.dictionary.col(m));
        if (std::abs(dot) < 1e-12) {
            params.auxiliary.col(m) = params.dictionary.col(m);  // deterministic repair
        } else if (std::abs(dot - 1.0) > 1e-13) {
            params.auxiliary.col(m) /= dot;
        }
    }
}

inline std::pair<double, double> evaluate_validation(const UnrolledParams& params,
                                                     const ToyClassifier& clf,
                                                     const ToyDataset& val) {
    Eigen::Index correct = 0;
    double nonzero_fraction = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        auto [code, cache] = unrolled_forward(params, val.signals[i]);
        if (clf.predict(code.values) == val.labels[i]) ++correct;
        nonzero_fraction += static_cast<double>(code.support_size()) /
                            static_cast<double>(params.code_dim());
    }
    return {static_cast<double>(correct) / static_cast<double>(val.size()),
            nonzero_fraction / static_cast<double>(val.size())};
}

}  // namespace detail

/// Projected SGD over (D, W or tied, log lambda_star, classifier): after every
/// step dictionary columns are renormalized and W is rescaled to W_m^t D_m = 1.
inline TrainResult train_toy(const ToyDataset& train, const ToyDataset& val,
                             UnrolledParams params, ToyClassifier classifier,
                             const TrainConfig& cfg) {
    if (train.size() < 2 || val.size() < 1)
        throw std::invalid_argument("dataset too small to train on");
    detail::project_parameters(params);

    TrainResult result;
    for (int epoch = cfg.start_epoch; epoch < cfg.start_epoch + cfg.epochs; ++epoch) {
        Rng order_rng(cfg.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1));
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_index(i))]);

        double epoch_loss = 0.0;
        double max_norm_err = 0.0, max_pair_err = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));

            Eigen::MatrixXd gd = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());
            Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(params.signal_dim(), params.code_dim());
            Eigen::MatrixXd gcw =
                Eigen::MatrixXd::Zero(classifier.weights.rows(), classifier.weights.cols());
            Eigen::VectorXd gcb = Eigen::VectorXd::Zero(classifier.bias.size());
            double glog = 0.0;

            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t i = order[k];
                auto [code, cache] = unrolled_forward(params, train.signals[i]);
                const ClassifierGrads cg =
                    softmax_cross_entropy(classifier, code.values, train.labels[i]);
                if (!std::isfinite(cg.loss)) throw DivergedLoss(epoch);
                epoch_loss += cg.loss;
                const UnrolledGradients ug = unrolled_backward(cache, params, cg.d_code);
                gd += ug.d_dictionary;
                if (!params.tied) gw += ug.d_auxiliary;
                glog += ug.d_log_lambda_star;
                gcw += cg.d_weights;
                gcb += cg.d_bias;
            }

            const double scale = cfg.learning_rate / static_cast<double>(end - begin);
            params.dictionary -= scale * gd;
            if (!params.tied) params.auxiliary -= scale * gw;
            params.log_lambda_star -= scale * glog;
            classifier.weights -= scale * gcw;
            classifier.bias -= scale * gcb;
            detail::project_parameters(params);
            if (!std::isfinite(params.lambda_star()) || !(params.lambda_star() > 0.0))
                throw DivergedLoss(epoch);

            for (Eigen::Index m = 0; m < params.code_dim(); ++m) {
                max_norm_err =
                    std::max(max_norm_err, std::abs(params.dictionary.col(m).norm() - 1.0));
                max_pair_err = std::max(
                    max_pair_err,
                    std::abs(std::abs(params.w().col(m).dot(params.dictionary.col(m))) - 1.0));
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = epoch_loss / static_cast<double>(train.size());
        std::tie(em.val_accuracy, em.mean_sparsity) =
            detail::evaluate_validation(params, classifier, val);
        em.max_atom_norm_error = max_norm_err;
        em.max_pairing_error = max_pair_err;
        result.metrics.push_back(em);
    }
    result.params = std::move(params);
    result.classifier = std::move(classifier);
    return result;
}

/// Metrics CSV: epoch,train_loss,val_acc,mean_sparsity.
inline void export_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics,
                               bool append = false) {
    std::ofstream os(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!os) throw Error("cannot open for writing: " + path);
    if (!append) os << "epoch,train_loss,val_acc,mean_sparsity\n";
    for (const auto& m : metrics)
        os << m.epoch << ',' << format_g17(m.train_loss) << ',' << format_g17(m.val_accuracy)
           << ',' << format_g17(m.mean_sparsity) << '\n';
}

struct Checkpoint {
    UnrolledParams params;
    ToyClassifier classifier;
    int epoch = 0;
    std::uint64_t seed = 0;
};

inline void save_checkpoint(const std::string& base_path, const Checkpoint& ckpt) {
    save_matrix(base_path + ".dict.sslab", ckpt.params.dictionary);
    save_matrix(base_path + ".aux.sslab", ckpt.params.w());
    save_matrix(base_path + ".clf_weights.sslab", ckpt.classifier.weights);
    save_matrix(base_path + ".clf_bias.sslab", ckpt.classifier.bias);
    std::ofstream os(base_path + ".meta.txt", std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + base_path + ".meta.txt");
    os << "lambda_star = " << format_g17(ckpt.params.lambda_star()) << '\n';
    os << "log_lambda_star = " << format_g17(ckpt.params.log_lambda_star) << '\n';
    os << "n_layers = " << ckpt.params.n_layers << '\n';
    os << "tied = " << (ckpt.params.tied ? "true" : "false") << '\n';
    os << "lambda_max_policy = "
       << (ckpt.params.lambda_max_policy == LambdaMaxPolicy::DataDependent ? "data" : "fixed")
       << '\n';
    os << "fixed_lambda_max = " << format_g17(ckpt.params.fixed_lambda_max) << '\n';
    os << "epoch = " << ckpt.epoch << '\n';
    os << "seed = " << ckpt.seed << '\n';
}

inline Checkpoint load_checkpoint(const std::string& base_path) {
    Checkpoint ckpt;
    ckpt.params.dictionary = load_matrix(base_path + ".dict.sslab");
    ckpt.params.auxiliary = load_matrix(base_path + ".aux.sslab");
    ckpt.classifier.weights = load_matrix(base_path + ".clf_weights.sslab");
    ckpt.classifier.bias = load_matrix(base_path + ".clf_bias.sslab");

    std::ifstream is(base_path + ".meta.txt");
    if (!is) throw Error("cannot open: " + base_path + ".meta.txt");
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "log_lambda_star") ckpt.params.log_lambda_star = std::stod(value);
        else if (key == "n_layers") ckpt.params.n_layers = std::stoi(value);
        else if (key == "tied") ckpt.params.tied = (value == "true");
        else if (key == "lambda_max_policy")
            ckpt.params.lambda_max_policy =
                value == "fixed" ? LambdaMaxPolicy::Fixed : LambdaMaxPolicy::DataDependent;
        else if (key == "fixed_lambda_max") ckpt.params.fixed_lambda_max = std::stod(value);
        else if (key == "epoch") ckpt.epoch = std::stoi(value);
        else if (key == "seed") ckpt.seed = std::stoull(value);
    }
    return ckpt;
}

}  // namespace sslab
