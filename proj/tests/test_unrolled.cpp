#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "helpers.hpp"
#include "sslab/unrolled.hpp"

using namespace sslab;

namespace {

UnrolledParams random_params(std::uint64_t seed, Eigen::Index p, Eigen::Index m, int layers,
                             bool tied) {
    Rng rng(seed);
    UnrolledParams params;
    params.dictionary = normalize_columns(rng.normal_matrix(p, m)).atoms;
    params.tied = tied;
    if (!tied) {
        const Dictionary d{params.dictionary};
        params.auxiliary = normalize_against(rng.normal_matrix(p, m), d).atoms;
    }
    params.n_layers = layers;
    return params;
}

bool near_kink(const ForwardCache& cache, double margin) {
    for (const auto& p : cache.preacts)
        if (p.cwiseAbs().minCoeff() < margin) return true;
    return false;
}

void check_gradient_pair(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e-8) {
        CHECK(std::abs(analytic - numeric) < 1e-8);
    } else {
        CHECK(std::abs(analytic - numeric) / scale < 1e-5);
    }
}

}  // namespace

TEST_CASE("zero layers produce the zero code") {
    UnrolledParams params = random_params(1, 5, 7, 0, true);
    Rng rng(2);
    auto [code, cache] = unrolled_forward(params, Signal{rng.normal_vector(5)});
    CHECK(code.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(cache.preacts.empty());
}

TEST_CASE("a single layer is one thresholding of W^t beta") {
    UnrolledParams params = random_params(3, 6, 8, 1, true);
    params.log_lambda_star = std::log(0.2);
    Rng rng(4);
    const Signal beta{rng.normal_vector(6)};
    const double lambda_max =
        (params.w().transpose() * beta.values).lpNorm<Eigen::Infinity>();
    REQUIRE(lambda_max > 0.2);
    auto [code, cache] = unrolled_forward(params, beta);
    // with N = 1 the only threshold is lambda_star itself
    const Eigen::VectorXd expect =
        positive_prox(params.w().transpose() * beta.values, 0.2);
    CHECK((code.values - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("forward equals the homotopy solver bitwise on 1000 instances") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const bool tied = seed % 2;
        UnrolledParams params = random_params(10000 + seed, 5, 7, 3, tied);
        Rng rng(20000 + seed);
        const Signal beta{rng.normal_vector(5)};
        const double lambda_max =
            (params.w().transpose() * beta.values).lpNorm<Eigen::Infinity>();
        if (lambda_max < 1e-6) continue;
        params.log_lambda_star = std::log(0.05 * lambda_max);
        auto [code, cache] = unrolled_forward(params, beta);

        const ThresholdSchedule sched =
            make_schedule(lambda_max, params.lambda_star(), params.n_layers);
        const Dictionary d{params.dictionary};
        const AuxiliaryMatrix w{params.w()};
        auto [solver_code, trace] = solve_generalized_istc(d, w, beta, sched);
        REQUIRE((code.values - solver_code.values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
    UnrolledParams params = random_params(5, 6, 9, 4, false);
    Rng rng(6);
    const Signal beta{rng.normal_vector(6)};
    auto [code, cache] = unrolled_forward(params, beta);
    const UnrolledGradients g =
        unrolled_backward(cache, params, Eigen::VectorXd::Zero(9));
    CHECK(g.d_dictionary.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_auxiliary.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_log_lambda_star == 0.0);
}

TEST_CASE("single-layer bias gradient follows the hand chain rule") {
    // orthonormal D, beta aligned with atom 2: only that coordinate is active,
    // and d loss / d log lambda_star = -lambda_1 * grad(2) with lambda_1 = lambda_star
    UnrolledParams params;
    params.dictionary = Eigen::MatrixXd::Identity(5, 5);
    params.tied = true;
    params.n_layers = 1;
    params.log_lambda_star = std::log(0.5);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
    b(2) = 2.0;
    auto [code, cache] = unrolled_forward(params, Signal{b});
    REQUIRE(code.support == std::vector<Eigen::Index>{2});

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(5);
    grad(2) = 1.7;
    const UnrolledGradients g = unrolled_backward(cache, params, grad);
    CHECK(g.d_log_lambda_star == Catch::Approx(-0.5 * 1.7).epsilon(1e-12));
}

TEST_CASE("finite differences on a quadratic and a constant") {
    UnrolledParams params = random_params(7, 3, 4, 2, true);
    const auto quadratic = [](const UnrolledParams& p) {
        return 0.5 * p.log_lambda_star * p.log_lambda_star;
    };
    const UnrolledGradients gq = finite_diff_gradient(quadratic, params, 1e-6);
    CHECK(gq.d_log_lambda_star == Catch::Approx(params.log_lambda_star).margin(1e-9));
    CHECK(gq.d_dictionary.cwiseAbs().maxCoeff() == 0.0);

    const auto constant = [](const UnrolledParams&) { return 3.25; };
    const UnrolledGradients gc = finite_diff_gradient(constant, params, 1e-6);
    CHECK(gc.d_dictionary.cwiseAbs().maxCoeff() == 0.0);
    CHECK(gc.d_log_lambda_star == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    int accepted = 0;
    std::uint64_t seed = 0;
    while (accepted < 20 && seed < 200) {
        const bool tied = seed % 2;
        UnrolledParams params = random_params(30000 + seed, 6, 9, 4, tied);
        params.lambda_max_policy = LambdaMaxPolicy::Fixed;  // FD must not cross the max
        params.fixed_lambda_max = 2.0;
        params.log_lambda_star = std::log(0.15);
        Rng rng(40000 + seed);
        const Signal beta{rng.normal_vector(6)};
        const Eigen::VectorXd loss_dir = rng.normal_vector(9);
        ++seed;

        auto [code, cache] = unrolled_forward(params, beta);
        if (near_kink(cache, 1e-4)) continue;  // reject near-ReLU-kink instances
        ++accepted;

        const UnrolledGradients analytic = unrolled_backward(cache, params, loss_dir);
        const auto loss_fn = [&](const UnrolledParams& p) {
            auto [c, cc] = unrolled_forward(p, beta);
            return loss_dir.dot(c.values);
        };
        const UnrolledGradients numeric = finite_diff_gradient(loss_fn, params, 1e-6);

        for (Eigen::Index c = 0; c < 9; ++c)
            for (Eigen::Index r = 0; r < 6; ++r)
                check_gradient_pair(analytic.d_dictionary(r, c), numeric.d_dictionary(r, c));
        if (!tied)
            for (Eigen::Index c = 0; c < 9; ++c)
                for (Eigen::Index r = 0; r < 6; ++r)
                    check_gradient_pair(analytic.d_auxiliary(r, c), numeric.d_auxiliary(r, c));
        check_gradient_pair(analytic.d_log_lambda_star, numeric.d_log_lambda_star);
    }
    REQUIRE(accepted == 20);
}

TEST_CASE("backward validates the cache") {
    UnrolledParams params = random_params(8, 5, 6, 3, true);
    Rng rng(9);
    auto [code, cache] = unrolled_forward(params, Signal{rng.normal_vector(5)});
    params.n_layers = 4;
    CHECK_THROWS_AS(unrolled_backward(cache, params, Eigen::VectorXd::Zero(6)), CacheMismatch);
    params.n_layers = 3;
    CHECK_THROWS_AS(unrolled_backward(cache, params, Eigen::VectorXd::Zero(7)), CacheMismatch);
}

TEST_CASE("toy training separates the planted classes") {
    const ToySplit split = make_toy_split(100, 500, 200);

    UnrolledParams params = random_params(102, 16, 12, 12, true);
    params.log_lambda_star = std::log(0.2);
    Rng clf_rng(103);
    ToyClassifier clf = ToyClassifier::init(2, 12, clf_rng);

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 0.0075;  // pilot-frozen: keeps lambda_star useful at convergence
    cfg.seed = 104;
    const TrainResult result = train_toy(split.train, split.val, params, clf, cfg);

    double best_acc = 0.0;
    for (const auto& m : result.metrics) best_acc = std::max(best_acc, m.val_accuracy);
    CHECK(best_acc >= 0.9);
    CHECK(result.metrics.back().val_accuracy >= 0.9);

    for (const auto& m : result.metrics) {
        CHECK(m.max_atom_norm_error <= 1e-10);
        CHECK(m.max_pairing_error <= 1e-10);
    }

    // sparse codes at convergence, sparser still when lambda_star doubles
    const double sparsity = result.metrics.back().mean_sparsity;
    CHECK(sparsity < 0.5);
    UnrolledParams doubled = result.params;
    doubled.log_lambda_star += std::log(2.0);
    double doubled_sparsity = 0.0;
    for (const auto& sig : split.val.signals) {
        auto [code, cache] = unrolled_forward(doubled, sig);
        doubled_sparsity += static_cast<double>(code.support_size()) / 12.0;
    }
    doubled_sparsity /= static_cast<double>(split.val.size());
    CHECK(doubled_sparsity <= sparsity);
}

TEST_CASE("shuffled labels train to chance accuracy") {
    // a single randomized run can sit far from 1/2: the jointly trained
    // dictionary still discovers the cluster structure without labels and any
    // probe direction splits the code clusters one way or the other, so the
    // control is the mean over shuffle seeds (symmetric around chance)
    const ToySplit split = make_toy_split(110, 500, 200);
    const UnrolledParams params = [] {
        UnrolledParams p = random_params(113, 16, 12, 12, true);
        p.log_lambda_star = std::log(0.2);
        return p;
    }();
    Rng clf_rng(114);
    const ToyClassifier clf = ToyClassifier::init(2, 12, clf_rng);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.0075;
    cfg.seed = 115;
    double mean_acc = 0.0;
    const int n_controls = 10;
    for (std::uint64_t s = 0; s < n_controls; ++s) {
        const ToyDataset shuffled = shuffle_labels(split.train, 211 + s * 31);
        const TrainResult r = train_toy(shuffled, split.val, params, clf, cfg);
        mean_acc += r.metrics.back().val_accuracy;
    }
    mean_acc /= n_controls;
    CHECK(mean_acc >= 0.4);
    CHECK(mean_acc <= 0.6);
}

TEST_CASE("zero learning rate leaves parameters bitwise unchanged") {
    const ToySplit split = make_toy_split(120, 60, 20);
    const ToyDataset& train = split.train;
    const ToyDataset& val = split.val;
    UnrolledParams params = random_params(122, 16, 12, 6, false);
    Rng clf_rng(123);
    const ToyClassifier clf = ToyClassifier::init(2, 12, clf_rng);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    cfg.seed = 124;
    const TrainResult result = train_toy(train, val, params, clf, cfg);
    CHECK((result.params.dictionary - params.dictionary).cwiseAbs().maxCoeff() == 0.0);
    CHECK((result.params.auxiliary - params.auxiliary).cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.params.log_lambda_star == params.log_lambda_star);
    CHECK((result.classifier.weights - clf.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("absurd learning rates raise DivergedLoss") {
    const ToySplit split = make_toy_split(130, 60, 20);
    const ToyDataset& train = split.train;
    const ToyDataset& val = split.val;
    UnrolledParams params = random_params(132, 16, 12, 6, true);
    Rng clf_rng(133);
    const ToyClassifier clf = ToyClassifier::init(2, 12, clf_rng);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e12;
    cfg.seed = 134;
    CHECK_THROWS_AS(train_toy(train, val, params, clf, cfg), DivergedLoss);
}

TEST_CASE("checkpoints round trip and resumed metrics continue the epoch index") {
    const ToySplit split = make_toy_split(140, 100, 40);
    const ToyDataset& train = split.train;
    const ToyDataset& val = split.val;
    UnrolledParams params = random_params(142, 16, 12, 6, true);
    Rng clf_rng(143);
    const ToyClassifier clf = ToyClassifier::init(2, 12, clf_rng);

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.05;
    cfg.seed = 144;
    const TrainResult first = train_toy(train, val, params, clf, cfg);

    Checkpoint ckpt;
    ckpt.params = first.params;
    ckpt.classifier = first.classifier;
    ckpt.epoch = 3;
    ckpt.seed = cfg.seed;
    save_checkpoint("unrolled_ckpt_test", ckpt);
    const Checkpoint back = load_checkpoint("unrolled_ckpt_test");
    CHECK((back.params.dictionary - first.params.dictionary).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.params.log_lambda_star == first.params.log_lambda_star);
    CHECK(back.epoch == 3);

    TrainConfig resume = cfg;
    resume.epochs = 2;
    resume.start_epoch = back.epoch;
    UnrolledParams resumed_params = back.params;
    resumed_params.tied = true;
    const TrainResult second = train_toy(train, val, resumed_params, back.classifier, resume);
    REQUIRE(second.metrics.size() == 2);
    CHECK(second.metrics[0].epoch == 3);
    CHECK(second.metrics[1].epoch == 4);

    for (const char* suffix : {".dict.sslab", ".aux.sslab", ".clf_weights.sslab",
                               ".clf_bias.sslab", ".meta.txt"})
        std::remove((std::string("unrolled_ckpt_test") + suffix).c_str());
}

TEST_CASE("metrics CSV export has the documented header") {
    std::vector<EpochMetrics> metrics(2);
    metrics[0].epoch = 0;
    metrics[0].train_loss = 0.5;
    metrics[1].epoch = 1;
    metrics[1].train_loss = 0.25;
    export_metrics_csv("unrolled_metrics_test.csv", metrics);
    std::ifstream is("unrolled_metrics_test.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "epoch,train_loss,val_acc,mean_sparsity");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::remove("unrolled_metrics_test.csv");
}
