// sslab command line: seeded, reproducible experiments over the library.
// Every flag mirrors a config-file key one to one; flags override the file.

#include <cstdint>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sslab/harness.hpp"

namespace {

struct Binding {
    CLI::Option* opt;
    std::string key;
    std::function<void(const std::string&)> set;
};

void parse_into(const std::string& value, std::string& out) { out = value; }
void parse_into(const std::string& value, bool& out) { out = value == "true" || value == "1"; }
void parse_into(const std::string& value, int& out) { out = std::stoi(value); }
void parse_into(const std::string& value, double& out) { out = std::stod(value); }
void parse_into(const std::string& value, std::uint64_t& out) { out = std::stoull(value); }
void parse_into(const std::string& value, Eigen::Index& out) {
    out = static_cast<Eigen::Index>(std::stoll(value));
}
void parse_into(const std::string& value, std::vector<std::string>& out) {
    out.clear();
    std::size_t begin = 0;
    while (begin <= value.size()) {
        const auto semi = value.find(';', begin);
        const std::string item = value.substr(
            begin, semi == std::string::npos ? std::string::npos : semi - begin);
        if (!item.empty()) out.push_back(item);
        if (semi == std::string::npos) break;
        begin = semi + 1;
    }
}

template <typename T>
void bind_option(CLI::App* cmd, std::vector<Binding>& bindings, const std::string& flag,
          const std::string& key, T& var, const std::string& help) {
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
        opt = cmd->add_flag(flag, var, help);
    else
        opt = cmd->add_option(flag, var, help);
    bindings.push_back({opt, key, [&var](const std::string& v) { parse_into(v, var); }});
}

// config file applies only where no flag was given: flag > file > default
void apply_config(const std::string& path, const std::vector<Binding>& bindings) {
    if (path.empty()) return;
    const sslab::KeyValues kv = sslab::load_config_file(path);
    for (const auto& b : bindings) {
        if (b.opt->count() > 0) continue;
        const auto it = kv.find(b.key);
        if (it != kv.end()) b.set(it->second);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"positive l1 sparse coding lab: homotopy solvers, certification, "
                 "scattering front end, toy task-driven training"};
    app.require_subcommand(1);

    std::string config_path;

    // benchmark ------------------------------------------------------------
    sslab::BenchmarkConfig bench;
    auto* bench_cmd = app.add_subcommand(
        "benchmark", "ISTA/FISTA/ISTC traces and oracle-relative errors on a "
                     "seeded planted ensemble");
    std::vector<Binding> bench_bind;
    bench_cmd->add_option("--config", config_path, "flat key = value config file");
    bind_option(bench_cmd, bench_bind, "--instances", "instances", bench.n_instances, "ensemble size");
    bind_option(bench_cmd, bench_bind, "--signal-dim", "signal_dim", bench.signal_dim, "P");
    bind_option(bench_cmd, bench_bind, "--atom-count", "atom_count", bench.atom_count, "M");
    bind_option(bench_cmd, bench_bind, "--support", "support", bench.support_size, "planted s");
    bind_option(bench_cmd, bench_bind, "--noise", "noise", bench.noise_level, "residual sigma");
    bind_option(bench_cmd, bench_bind, "--certified", "certified", bench.certified,
         "resample until s*mu < 1/2");
    bind_option(bench_cmd, bench_bind, "--iterations", "iterations", bench.n_iterations,
         "iterations / homotopy layers");
    bind_option(bench_cmd, bench_bind, "--gamma-cap", "gamma_cap", bench.gamma_cap,
         "upper cap on the schedule decay");
    bind_option(bench_cmd, bench_bind, "--adversarial", "adversarial", bench.adversarial,
         "also run generalized ISTC with an adversarial W");
    bind_option(bench_cmd, bench_bind, "--adversarial-product", "adversarial_product",
         bench.adversarial_product, "target s*mu~ for the adversarial W");
    bind_option(bench_cmd, bench_bind, "--seed", "seed", bench.seed, "base seed");
    bind_option(bench_cmd, bench_bind, "--out", "out", bench.out_dir, "output directory");

    // certify ----------------------------------------------------------------
    sslab::CertifyRunConfig cert;
    auto* cert_cmd = app.add_subcommand(
        "certify", "certify instances and verify solver traces against the "
                   "exponential-convergence bounds");
    std::vector<Binding> cert_bind;
    cert_cmd->add_option("--config", config_path, "flat key = value config file");
    bind_option(cert_cmd, cert_bind, "--instances", "instances", cert.n_instances, "ensemble size");
    bind_option(cert_cmd, cert_bind, "--signal-dim", "signal_dim", cert.signal_dim, "P");
    bind_option(cert_cmd, cert_bind, "--atom-count", "atom_count", cert.atom_count, "M");
    bind_option(cert_cmd, cert_bind, "--support", "support", cert.support_size, "planted s");
    bind_option(cert_cmd, cert_bind, "--noise", "noise", cert.noise_level, "residual sigma");
    bind_option(cert_cmd, cert_bind, "--certified", "certified", cert.certified,
         "resample until s*mu < 1/2");
    bind_option(cert_cmd, cert_bind, "--adversarial", "adversarial", cert.adversarial,
         "swap in an adversarial W");
    bind_option(cert_cmd, cert_bind, "--adversarial-product", "adversarial_product",
         cert.adversarial_product, "target s*mu~ for the adversarial W");
    bind_option(cert_cmd, cert_bind, "--layers", "layers", cert.n_layers, "homotopy layers");
    bind_option(cert_cmd, cert_bind, "--gamma-cap", "gamma_cap", cert.gamma_cap,
         "upper cap on the schedule decay");
    bind_option(cert_cmd, cert_bind, "--seed", "seed", cert.seed, "base seed");
    bind_option(cert_cmd, cert_bind, "--out", "out", cert.out_dir, "output directory");

    // scatter ----------------------------------------------------------------
    sslab::ScatterRunConfig scat;
    auto* scat_cmd = app.add_subcommand(
        "scatter", "wavelet scattering of images with optional PCA reduction");
    std::vector<Binding> scat_bind;
    scat_cmd->add_option("--config", config_path, "flat key = value config file");
    bind_option(scat_cmd, scat_bind, "--scale-exponent", "scale_exponent",
         scat.scattering.scale_exponent, "J (stride 2^J)");
    bind_option(scat_cmd, scat_bind, "--angles", "angles", scat.scattering.n_angles, "wavelet angles");
    bind_option(scat_cmd, scat_bind, "--phases", "phases", scat.scattering.n_phases, "phase shifts");
    bind_option(scat_cmd, scat_bind, "--colors", "colors", scat.scattering.n_colors, "input channels");
    bind_option(scat_cmd, scat_bind, "--height", "height", scat.scattering.height, "image height");
    bind_option(scat_cmd, scat_bind, "--width", "width", scat.scattering.width, "image width");
    bind_option(scat_cmd, scat_bind, "--images", "images", scat.image_paths,
         "input files (PGM/PPM or SSIMG001 tensors); config key uses ';' separators");
    bind_option(scat_cmd, scat_bind, "--synthetic", "synthetic", scat.synthetic_count,
         "generate this many seeded synthetic images when no files are given");
    bind_option(scat_cmd, scat_bind, "--reduce-to", "reduce_to", scat.reduce_to,
         "fit a PCA reduction to this many channels (0 = off)");
    bind_option(scat_cmd, scat_bind, "--seed", "seed", scat.seed, "base seed");
    bind_option(scat_cmd, scat_bind, "--out", "out", scat.out_dir, "output directory");

    // train-toy --------------------------------------------------------------
    sslab::TrainToyRunConfig train;
    auto* train_cmd = app.add_subcommand(
        "train-toy", "task-driven dictionary training on the synthetic two-class dataset");
    std::vector<Binding> train_bind;
    train_cmd->add_option("--config", config_path, "flat key = value config file");
    bind_option(train_cmd, train_bind, "--train-samples", "train_samples", train.n_train,
         "training set size");
    bind_option(train_cmd, train_bind, "--val-samples", "val_samples", train.n_val,
         "validation set size");
    bind_option(train_cmd, train_bind, "--signal-dim", "signal_dim", train.signal_dim, "P");
    bind_option(train_cmd, train_bind, "--atom-count", "atom_count", train.atom_count, "M");
    bind_option(train_cmd, train_bind, "--planted-support", "planted_support",
         train.planted_support, "atoms per sample");
    bind_option(train_cmd, train_bind, "--noise", "noise", train.noise, "sample noise");
    bind_option(train_cmd, train_bind, "--shuffle", "shuffle", train.shuffle,
         "shuffled-label control run");
    bind_option(train_cmd, train_bind, "--epochs", "epochs", train.epochs, "training epochs");
    bind_option(train_cmd, train_bind, "--learning-rate", "learning_rate", train.learning_rate,
         "SGD step size");
    bind_option(train_cmd, train_bind, "--batch-size", "batch_size", train.batch_size,
         "minibatch size");
    bind_option(train_cmd, train_bind, "--layers", "layers", train.n_layers, "unrolled layers N");
    bind_option(train_cmd, train_bind, "--lambda-init", "lambda_init", train.lambda_init,
         "initial lambda_star");
    bind_option(train_cmd, train_bind, "--tied", "tied", train.tied, "tie W to D");
    bind_option(train_cmd, train_bind, "--resume", "resume_from", train.resume_from,
         "checkpoint base path to resume from");
    bind_option(train_cmd, train_bind, "--seed", "seed", train.seed, "base seed");
    bind_option(train_cmd, train_bind, "--out", "out", train.out_dir, "output directory");

    // oracle-check -----------------------------------------------------------
    sslab::OracleCheckConfig ocheck;
    auto* oracle_cmd = app.add_subcommand(
        "oracle-check", "exact enumeration solves with a KKT audit");
    std::vector<Binding> oracle_bind;
    oracle_cmd->add_option("--config", config_path, "flat key = value config file");
    bind_option(oracle_cmd, oracle_bind, "--instances", "instances", ocheck.n_instances,
         "ensemble size");
    bind_option(oracle_cmd, oracle_bind, "--signal-dim", "signal_dim", ocheck.signal_dim, "P");
    bind_option(oracle_cmd, oracle_bind, "--atom-count", "atom_count", ocheck.atom_count, "M");
    bind_option(oracle_cmd, oracle_bind, "--support", "support", ocheck.support_size, "planted s");
    bind_option(oracle_cmd, oracle_bind, "--noise", "noise", ocheck.noise_level, "residual sigma");
    bind_option(oracle_cmd, oracle_bind, "--lambda", "lambda", ocheck.lambda_star,
         "Lagrangian weight");
    bind_option(oracle_cmd, oracle_bind, "--seed", "seed", ocheck.seed, "base seed");
    bind_option(oracle_cmd, oracle_bind, "--out", "out", ocheck.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench_cmd->parsed()) {
            apply_config(config_path, bench_bind);
            if (bench.out_dir.empty()) throw sslab::Error("--out is required");
            const sslab::BenchmarkResult result = sslab::run_benchmark(bench);
            std::cout << "benchmark: " << bench.n_instances << " instances, "
                      << result.rows.size() << " solver runs written to " << bench.out_dir
                      << "\n";
            return 0;
        }
        if (cert_cmd->parsed()) {
            apply_config(config_path, cert_bind);
            if (cert.out_dir.empty()) throw sslab::Error("--out is required");
            const sslab::CertifyRunResult result = sslab::run_certify(cert);
            int passed = 0;
            for (const auto& item : result.items)
                if (item.report.passed) ++passed;
            std::cout << "certify: " << passed << "/" << result.items.size()
                      << " traces passed, exit code " << result.exit_code << "\n";
            return result.exit_code;
        }
        if (scat_cmd->parsed()) {
            apply_config(config_path, scat_bind);
            if (scat.out_dir.empty()) throw sslab::Error("--out is required");
            const sslab::ScatterRunResult result = sslab::run_scatter(scat);
            std::cout << "scatter: " << result.images << " images, " << result.channels
                      << " channels each, written to " << scat.out_dir << "\n";
            return 0;
        }
        if (train_cmd->parsed()) {
            apply_config(config_path, train_bind);
            if (train.out_dir.empty()) throw sslab::Error("--out is required");
            const sslab::TrainToyRunResult result = sslab::run_train_toy(train);
            if (result.metrics.empty()) {
                std::cout << "train-toy: 0 epochs, checkpoint equals initialization\n";
            } else {
                const auto& last = result.metrics.back();
                std::cout << "train-toy: epoch " << last.epoch << " val_acc "
                          << sslab::format_g17(last.val_accuracy) << " sparsity "
                          << sslab::format_g17(last.mean_sparsity) << "\n";
            }
            return 0;
        }
        if (oracle_cmd->parsed()) {
            apply_config(config_path, oracle_bind);
            if (ocheck.out_dir.empty()) throw sslab::Error("--out is required");
            const sslab::OracleCheckResult result = sslab::run_oracle_check(ocheck);
            std::cout << "oracle-check: " << result.checked << " instances, "
                      << result.kkt_failures << " KKT failures\n";
            return result.kkt_failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
