#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sslab/certify.hpp"
#include "sslab/core.hpp"
#include "sslab/image_io.hpp"
#include "sslab/matrix_io.hpp"
#include "sslab/oracle.hpp"
#include "sslab/prox_solvers.hpp"
#include "sslab/scattering.hpp"
#include "sslab/synthetic.hpp"
#include "sslab/text.hpp"
#include "sslab/unrolled.hpp"

namespace sslab {

inline constexpr char kToolVersion[] = "sslab 0.1.0";

/// Flat key = value configuration text, '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config: " + path);
    KeyValues kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void write_manifest(const std::string& dir, const KeyValues& resolved) {
    std::ofstream os(join_path(dir, "manifest.txt"), std::ios::binary);
    if (!os) throw Error("cannot write manifest in " + dir);
    os << "tool_version = " << kToolVersion << '\n';
    for (const auto& [k, v] : resolved) os << k << " = " << v << '\n';  // map is sorted
}

inline std::string pad3(std::size_t i) {
    std::string s = std::to_string(i);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// benchmark: ISTA / FISTA / ISTC (and optional adversarial generalized ISTC)
// against the enumeration oracle on a seeded planted ensemble
// ---------------------------------------------------------------------------

struct BenchmarkConfig {
    int n_instances = 50;
    Eigen::Index signal_dim = 32;
    Eigen::Index atom_count = 8;
    Eigen::Index support_size = 1;
    double noise_level = 0.0;
    bool certified = true;  // resample dictionaries until s*mu < 1/2
    int n_iterations = 12;
    double gamma_cap = 2.0;  // schedule decay, capped inside the certified range
    bool adversarial = false;
    double adversarial_product = 10.0;
    std::uint64_t seed = 1;
    std::string out_dir;

    KeyValues resolved() const {
        KeyValues kv;
        kv["experiment"] = "benchmark";
        kv["instances"] = std::to_string(n_instances);
        kv["signal_dim"] = std::to_string(signal_dim);
        kv["atom_count"] = std::to_string(atom_count);
        kv["support"] = std::to_string(support_size);
        kv["noise"] = format_g17(noise_level);
        kv["certified"] = certified ? "true" : "false";
        kv["iterations"] = std::to_string(n_iterations);
        kv["gamma_cap"] = format_g17(gamma_cap);
        kv["adversarial"] = adversarial ? "true" : "false";
        kv["adversarial_product"] = format_g17(adversarial_product);
        kv["seed"] = std::to_string(seed);
        return kv;
    }
};

struct BenchmarkRow {
    std::size_t instance = 0;
    std::string solver;
    double final_lagrangian = 0.0;
    double oracle_lagrangian = 0.0;
    double linf_iter12 = 0.0;
    double relmse_iter12 = 0.0;  // NaN when the oracle code is zero
    double linf_final = 0.0;
    double relmse_final = 0.0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;

    std::vector<double> column(const std::string& solver, double BenchmarkRow::*field) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.solver == solver) out.push_back(r.*field);
        return out;
    }
};

namespace detail {

inline double schedule_gamma(const PlantedInstance& inst, double cap) {
    const double mu = inst.dictionary.atom_count() >= 2
                          ? mutual_coherence(inst.dictionary)
                          : 0.0;
    const double product = static_cast<double>(inst.planted_code.support_size()) * mu;
    if (product > 0.0 && product < 0.5) {
        const double high = 1.0 / (2.0 * product);
        return std::min(cap, 0.5 * (1.0 + high));
    }
    return cap;
}

}  // namespace detail

inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_manifest(cfg.out_dir, cfg.resolved());

    BenchmarkResult result;
    std::ofstream summary(detail::join_path(cfg.out_dir, "summary.csv"), std::ios::binary);
    if (!summary) throw Error("cannot write summary.csv");
    summary << "instance,solver,final_lagrangian,oracle_lagrangian,"
               "linf_iter12,relmse_iter12,linf_final,relmse_final\n";

    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n_instances); ++i) {
        ProblemSpec spec;
        spec.signal_dim = cfg.signal_dim;
        spec.atom_count = cfg.atom_count;
        spec.support_size = cfg.support_size;
        spec.noise_level = cfg.noise_level;
        spec.require_certified = cfg.certified;
        spec.max_retries = 4000;
        spec.seed = cfg.seed + i;
        const PlantedInstance inst = generate_planted(spec);

        const double lambda_max =
            (inst.dictionary.atoms.transpose() * inst.signal.values).lpNorm<Eigen::Infinity>();
        const double gamma = detail::schedule_gamma(inst, cfg.gamma_cap);
        ThresholdSchedule sched;
        if (cfg.n_iterations >= 1) {
            sched = make_schedule(lambda_max,
                                  lambda_max * std::pow(gamma, -cfg.n_iterations),
                                  cfg.n_iterations);
        } else {
            // zero-iteration run: traces carry only the alpha_0 row
            sched.lambda_max = lambda_max;
            sched.lambda_star = lambda_max;
            sched.n_layers = 0;
            sched.gamma = gamma;
        }
        const double lambda_star = sched.lambda_star;

        const SparseCode oracle = exact_positive_lasso(inst.dictionary, inst.signal,
                                                       lambda_star, cfg.support_size + 3);
        const double oracle_lagrangian =
            lagrangian(inst.dictionary, inst.signal, oracle, lambda_star);

        SolverConfig solver_cfg;
        solver_cfg.n_iterations = cfg.n_iterations;
        solver_cfg.record_codes = true;

        const auto emit = [&](const std::string& name, const SparseCode& code,
                              const ConvergenceTrace& trace) {
            export_trace_csv(detail::join_path(cfg.out_dir, "trace_instance" +
                                                                detail::pad3(i) + "_" + name +
                                                                ".csv"),
                             trace);
            BenchmarkRow row;
            row.instance = i;
            row.solver = name;
            row.oracle_lagrangian = oracle_lagrangian;
            row.final_lagrangian = lagrangian(inst.dictionary, inst.signal, code, lambda_star);
            const std::size_t idx12 =
                std::min<std::size_t>(12, trace.codes.empty() ? 0 : trace.codes.size() - 1);
            const bool oracle_zero = oracle.support.empty();
            row.linf_iter12 =
                (trace.codes[idx12] - oracle.values).lpNorm<Eigen::Infinity>();
            row.relmse_iter12 = oracle_zero ? std::numeric_limits<double>::quiet_NaN()
                                            : relative_mse(oracle.values, trace.codes[idx12]);
            row.linf_final = (code.values - oracle.values).lpNorm<Eigen::Infinity>();
            row.relmse_final = oracle_zero ? std::numeric_limits<double>::quiet_NaN()
                                           : relative_mse(oracle.values, code.values);
            result.rows.push_back(row);
            summary << row.instance << ',' << row.solver << ','
                    << format_g17(row.final_lagrangian) << ','
                    << format_g17(row.oracle_lagrangian) << ','
                    << format_g17(row.linf_iter12) << ',' << format_g17(row.relmse_iter12)
                    << ',' << format_g17(row.linf_final) << ','
                    << format_g17(row.relmse_final) << '\n';
        };

        auto [ista_code, ista_trace] =
            solve_ista(inst.dictionary, inst.signal, lambda_star, solver_cfg, &oracle.values);
        emit("ista", ista_code, ista_trace);
        auto [fista_code, fista_trace] =
            solve_fista(inst.dictionary, inst.signal, lambda_star, solver_cfg, &oracle.values);
        emit("fista", fista_code, fista_trace);
        auto [istc_code, istc_trace] =
            solve_istc(inst.dictionary, inst.signal, sched, solver_cfg, &oracle.values);
        emit("istc", istc_code, istc_trace);

        if (cfg.adversarial) {
            Rng wrng(cfg.seed + 0xADu * 1000003ull + i);
            const AuxiliaryMatrix w = adversarial_auxiliary(
                inst.dictionary, cfg.support_size, cfg.adversarial_product, wrng);
            const double wmax =
                (w.atoms.transpose() * inst.signal.values).lpNorm<Eigen::Infinity>();
            const ThresholdSchedule wsched =
                make_schedule(std::max(wmax, lambda_star * 2.0), lambda_star,
                              cfg.n_iterations);
            auto [adv_code, adv_trace] = solve_generalized_istc(
                inst.dictionary, w, inst.signal, wsched, solver_cfg, &oracle.values);
            emit("gistc_adv", adv_code, adv_trace);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// certify: generate certified instances, certify, solve, verify the trace
// ---------------------------------------------------------------------------

struct CertifyRunConfig {
    int n_instances = 20;
    Eigen::Index signal_dim = 32;
    Eigen::Index atom_count = 8;
    Eigen::Index support_size = 1;
    double noise_level = 0.0;
    bool certified = true;      // request the certified ensemble
    bool adversarial = false;   // swap in an adversarial W (hypothesis-violating)
    double adversarial_product = 10.0;
    int n_layers = 12;
    double gamma_cap = 2.0;
    std::uint64_t seed = 1;
    std::string out_dir;

    KeyValues resolved() const {
        KeyValues kv;
        kv["experiment"] = "certify";
        kv["instances"] = std::to_string(n_instances);
        kv["signal_dim"] = std::to_string(signal_dim);
        kv["atom_count"] = std::to_string(atom_count);
        kv["support"] = std::to_string(support_size);
        kv["noise"] = format_g17(noise_level);
        kv["certified"] = certified ? "true" : "false";
        kv["adversarial"] = adversarial ? "true" : "false";
        kv["adversarial_product"] = format_g17(adversarial_product);
        kv["layers"] = std::to_string(n_layers);
        kv["gamma_cap"] = format_g17(gamma_cap);
        kv["seed"] = std::to_string(seed);
        return kv;
    }
};

struct CertifyRunResult {
    struct Item {
        Certificate certificate;
        VerificationReport report;
    };
    std::vector<Item> items;
    int exit_code = 0;  // 0 certified+verified, 1 uncertified, 2 certified-but-violated
};

inline CertifyRunResult run_certify(const CertifyRunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_manifest(cfg.out_dir, cfg.resolved());

    CertifyRunResult result;
    std::ofstream results_csv(detail::join_path(cfg.out_dir, "results.csv"),
                              std::ios::binary);
    results_csv << "instance,condition_holds,guaranteed,passed,first_violation_iter,"
                   "first_violation_kind\n";

    bool any_uncertified = false;
    bool any_violation = false;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n_instances); ++i) {
        ProblemSpec spec;
        spec.signal_dim = cfg.signal_dim;
        spec.atom_count = cfg.atom_count;
        spec.support_size = cfg.support_size;
        spec.noise_level = cfg.noise_level;
        spec.require_certified = cfg.certified;
        spec.max_retries = 4000;
        spec.seed = cfg.seed + i;
        PlantedInstance inst = generate_planted(spec);
        if (cfg.adversarial) {
            Rng wrng(cfg.seed + 0xADu * 1000003ull + i);
            inst.auxiliary = adversarial_auxiliary(inst.dictionary, cfg.support_size,
                                                   cfg.adversarial_product, wrng);
        }

        const double lambda_max =
            (inst.auxiliary.atoms.transpose() * inst.signal.values).lpNorm<Eigen::Infinity>();
        const double gamma = cfg.adversarial
                                 ? cfg.gamma_cap
                                 : detail::schedule_gamma(inst, cfg.gamma_cap);
        const ThresholdSchedule sched = make_schedule(
            lambda_max, lambda_max * std::pow(gamma, -cfg.n_layers), cfg.n_layers);

        const Certificate cert = certify(inst, sched.gamma, lambda_max, cfg.n_layers);
        SolverConfig solver_cfg;
        auto [code, trace] = solve_generalized_istc(inst.dictionary, inst.auxiliary,
                                                    inst.signal, sched, solver_cfg,
                                                    &inst.planted_code.values);
        const VerificationReport report = verify_trace(inst, trace, cert);

        export_certificate(
            detail::join_path(cfg.out_dir, "certificate_" + detail::pad3(i) + ".txt"), cert);
        export_trace_csv(detail::join_path(cfg.out_dir, "trace_" + detail::pad3(i) + ".csv"),
                         trace);
        results_csv << i << ',' << (cert.condition_holds ? "true" : "false") << ','
                    << (report.guaranteed ? "true" : "false") << ','
                    << (report.passed ? "true" : "false") << ',';
        if (report.first_violation_iter) results_csv << *report.first_violation_iter;
        results_csv << ',' << report.first_violation_kind << '\n';

        if (!report.guaranteed) any_uncertified = true;
        if (report.guaranteed && !report.passed) any_violation = true;
        result.items.push_back({cert, report});
    }
    result.exit_code = any_violation ? 2 : (any_uncertified ? 1 : 0);
    return result;
}

// ---------------------------------------------------------------------------
// scatter: transform images (from files or a seeded synthetic batch), write
// tensors, the channel manifest, and optionally a fitted reduction
// ---------------------------------------------------------------------------

struct ScatterRunConfig {
    ScatteringConfig scattering;
    std::vector<std::string> image_paths;  // PGM/PPM or SSIMG001 tensors
    int synthetic_count = 0;               // generated when no paths are given
    Eigen::Index reduce_to = 0;            // 0 = no reduction fit
    std::uint64_t seed = 1;
    std::string out_dir;

    KeyValues resolved() const {
        KeyValues kv;
        kv["experiment"] = "scatter";
        kv["scale_exponent"] = std::to_string(scattering.scale_exponent);
        kv["angles"] = std::to_string(scattering.n_angles);
        kv["phases"] = std::to_string(scattering.n_phases);
        kv["colors"] = std::to_string(scattering.n_colors);
        kv["height"] = std::to_string(scattering.height);
        kv["width"] = std::to_string(scattering.width);
        kv["synthetic"] = std::to_string(synthetic_count);
        kv["reduce_to"] = std::to_string(reduce_to);
        kv["seed"] = std::to_string(seed);
        std::string paths;
        for (const auto& p : image_paths) {
            if (!paths.empty()) paths += ';';
            paths += p;
        }
        kv["images"] = paths;
        return kv;
    }
};

struct ScatterRunResult {
    Eigen::Index channels = 0;
    std::size_t images = 0;
    std::optional<ReductionOperator> reduction;
};

inline Image load_any_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error("cannot open: " + path);
    char magic[8] = {};
    probe.read(magic, 8);
    probe.close();
    if (std::memcmp(magic, kTensorMagic, 8) == 0) return Image{load_tensor(path)};
    return load_pnm(path);
}

inline ScatterRunResult run_scatter(const ScatterRunConfig& cfg) {
    cfg.scattering.validate();
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_manifest(cfg.out_dir, cfg.resolved());

    std::vector<Image> images;
    if (!cfg.image_paths.empty()) {
        for (const auto& p : cfg.image_paths) images.push_back(load_any_image(p));
    } else {
        Rng rng(cfg.seed);
        for (int i = 0; i < cfg.synthetic_count; ++i) {
            Image img;
            for (int c = 0; c < cfg.scattering.n_colors; ++c)
                img.channels.push_back(
                    power_law_image(rng, cfg.scattering.height, cfg.scattering.width));
            images.push_back(std::move(img));
        }
    }
    if (images.empty()) throw Error("no input images (give paths or a synthetic count)");

    const WaveletBank bank = build_morlet_bank(cfg.scattering);
    std::vector<ScatteringOutput> outputs;
    outputs.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        outputs.push_back(scatter(images[i], bank));
        save_tensor(
            detail::join_path(cfg.out_dir, "scattering_" + detail::pad3(i) + ".sstensor"),
            outputs.back().channels);
    }
    write_channel_manifest(detail::join_path(cfg.out_dir, "channels.manifest"),
                           outputs.front().descriptors);

    ScatterRunResult result;
    result.channels = outputs.front().channel_dim();
    result.images = images.size();
    if (cfg.reduce_to > 0) {
        result.reduction = fit_reduction(outputs, cfg.reduce_to);
        save_matrix(detail::join_path(cfg.out_dir, "reduction_projection.sslab"),
                    result.reduction->projection);
        save_matrix(detail::join_path(cfg.out_dir, "reduction_mean.sslab"),
                    result.reduction->mean);
        for (std::size_t i = 0; i < outputs.size(); ++i)
            save_tensor(
                detail::join_path(cfg.out_dir, "reduced_" + detail::pad3(i) + ".sstensor"),
                apply_reduction(*result.reduction, outputs[i]));
    }
    return result;
}

// ---------------------------------------------------------------------------
// train-toy: synthetic task-driven training with per-epoch checkpoints
// ---------------------------------------------------------------------------

struct TrainToyRunConfig {
    int n_train = 500;
    int n_val = 200;
    int signal_dim = 16;
    int atom_count = 12;
    int planted_support = 2;
    double noise = 0.05;
    bool shuffle = false;  // shuffled-label control
    int epochs = 50;
    double learning_rate = 0.0075;
    int batch_size = 10;
    int n_layers = 12;
    double lambda_init = 0.2;
    bool tied = true;
    std::uint64_t seed = 1;
    std::string resume_from;  // checkpoint base path; empty = fresh run
    std::string out_dir;

    KeyValues resolved() const {
        KeyValues kv;
        kv["experiment"] = "train-toy";
        kv["train_samples"] = std::to_string(n_train);
        kv["val_samples"] = std::to_string(n_val);
        kv["signal_dim"] = std::to_string(signal_dim);
        kv["atom_count"] = std::to_string(atom_count);
        kv["planted_support"] = std::to_string(planted_support);
        kv["noise"] = format_g17(noise);
        kv["shuffle"] = shuffle ? "true" : "false";
        kv["epochs"] = std::to_string(epochs);
        kv["learning_rate"] = format_g17(learning_rate);
        kv["batch_size"] = std::to_string(batch_size);
        kv["layers"] = std::to_string(n_layers);
        kv["lambda_init"] = format_g17(lambda_init);
        kv["tied"] = tied ? "true" : "false";
        kv["seed"] = std::to_string(seed);
        kv["resume_from"] = resume_from;
        return kv;
    }
};

struct TrainToyRunResult {
    std::vector<EpochMetrics> metrics;
    Checkpoint final_checkpoint;
};

/// Trains epoch by epoch, checkpointing after each one; a DivergedLoss leaves
/// the last good checkpoint on disk and is rethrown.
inline TrainToyRunResult run_train_toy(const TrainToyRunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_manifest(cfg.out_dir, cfg.resolved());

    ToySplit split = make_toy_split(cfg.seed, cfg.n_train, cfg.n_val, cfg.signal_dim,
                                    cfg.atom_count, cfg.planted_support, cfg.noise);
    if (cfg.shuffle) split.train = shuffle_labels(split.train, cfg.seed ^ 0x5A5A5A5Aull);

    Checkpoint state;
    if (!cfg.resume_from.empty()) {
        state = load_checkpoint(cfg.resume_from);
    } else {
        Rng init_rng(cfg.seed + 1);
        state.params.dictionary =
            normalize_columns(init_rng.normal_matrix(cfg.signal_dim, cfg.atom_count)).atoms;
        state.params.tied = cfg.tied;
        if (!cfg.tied)
            state.params.auxiliary = state.params.dictionary;
        state.params.n_layers = cfg.n_layers;
        state.params.log_lambda_star = std::log(cfg.lambda_init);
        state.classifier = ToyClassifier::init(2, cfg.atom_count, init_rng);
        state.epoch = 0;
        state.seed = cfg.seed;
    }

    const std::string metrics_path = detail::join_path(cfg.out_dir, "metrics.csv");
    const bool fresh = cfg.resume_from.empty();
    if (fresh) export_metrics_csv(metrics_path, {});  // header only

    const std::string ckpt_base = detail::join_path(cfg.out_dir, "checkpoint");
    save_checkpoint(ckpt_base, state);  // epochs = 0 leaves the initialization

    TrainConfig train_cfg;
    train_cfg.epochs = 1;
    train_cfg.learning_rate = cfg.learning_rate;
    train_cfg.batch_size = cfg.batch_size;
    train_cfg.seed = state.seed;

    TrainToyRunResult result;
    for (int e = 0; e < cfg.epochs; ++e) {
        train_cfg.start_epoch = state.epoch;
        const TrainResult step =
            train_toy(split.train, split.val, state.params, state.classifier, train_cfg);
        state.params = step.params;
        state.classifier = step.classifier;
        state.epoch += 1;
        export_metrics_csv(metrics_path, step.metrics, /*append=*/true);
        save_checkpoint(ckpt_base, state);
        result.metrics.insert(result.metrics.end(), step.metrics.begin(),
                              step.metrics.end());
    }
    result.final_checkpoint = std::move(state);
    return result;
}

// ---------------------------------------------------------------------------
// oracle-check: exact solves + KKT audit over a seeded ensemble
// ---------------------------------------------------------------------------

struct OracleCheckConfig {
    int n_instances = 20;
    Eigen::Index signal_dim = 8;
    Eigen::Index atom_count = 12;
    Eigen::Index support_size = 2;
    double noise_level = 0.0;
    double lambda_star = 0.1;
    std::uint64_t seed = 1;
    std::string out_dir;

    KeyValues resolved() const {
        KeyValues kv;
        kv["experiment"] = "oracle-check";
        kv["instances"] = std::to_string(n_instances);
        kv["signal_dim"] = std::to_string(signal_dim);
        kv["atom_count"] = std::to_string(atom_count);
        kv["support"] = std::to_string(support_size);
        kv["noise"] = format_g17(noise_level);
        kv["lambda"] = format_g17(lambda_star);
        kv["seed"] = std::to_string(seed);
        return kv;
    }
};

struct OracleCheckResult {
    int checked = 0;
    int kkt_failures = 0;
};

inline OracleCheckResult run_oracle_check(const OracleCheckConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_manifest(cfg.out_dir, cfg.resolved());

    OracleCheckResult result;
    std::ofstream csv(detail::join_path(cfg.out_dir, "oracle_check.csv"), std::ios::binary);
    csv << "instance,kkt_ok,support_size,lagrangian\n";
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n_instances); ++i) {
        ProblemSpec spec;
        spec.signal_dim = cfg.signal_dim;
        spec.atom_count = cfg.atom_count;
        spec.support_size = cfg.support_size;
        spec.noise_level = cfg.noise_level;
        spec.seed = cfg.seed + i;
        const PlantedInstance inst = generate_planted(spec);
        const SparseCode code = exact_positive_lasso(inst.dictionary, inst.signal,
                                                     cfg.lambda_star, cfg.support_size + 3);
        const bool ok = kkt_check(inst.dictionary, inst.signal, code, cfg.lambda_star, 1e-9);
        save_instance(detail::join_path(cfg.out_dir, "instance_" + detail::pad3(i)), inst,
                      spec, cfg.lambda_star);
        save_matrix(detail::join_path(cfg.out_dir, "oracle_code_" + detail::pad3(i) + ".sslab"),
                    code.values);
        csv << i << ',' << (ok ? "true" : "false") << ',' << code.support_size() << ','
            << format_g17(lagrangian(inst.dictionary, inst.signal, code, cfg.lambda_star))
            << '\n';
        ++result.checked;
        if (!ok) ++result.kkt_failures;
    }
    return result;
}

}  // namespace sslab
