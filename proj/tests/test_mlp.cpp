#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "srcinv/errors.hpp"
#include "srcinv/mlp.hpp"
#include "srcinv/rng.hpp"

using namespace srcinv;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<TrainingPair> diagonal_pairs(int n, double gain, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<TrainingPair> pairs;
    for (int k = 0; k < n; ++k) {
        TrainingPair p;
        p.emissions.resize(3);
        for (int j = 0; j < 3; ++j) p.emissions[j] = rng.uniform(0.0, 30.0);
        p.concentrations = gain * p.emissions;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace

TEST_CASE("topology strings parse and validate") {
    const Topology t = Topology::parse("6:15:30:12");
    CHECK(t.sizes == std::vector<int>{6, 15, 30, 12});
    CHECK(t.to_string() == "6:15:30:12");
    t.validate();
    CHECK_THROWS_AS(Topology::parse("6:15:30").validate(), ValidationError);
    CHECK_THROWS_AS(Topology::parse("6:0:30:12").validate(), ValidationError);
    CHECK_THROWS_AS(Topology::parse("6:x:30:12"), ParseError);
}

TEST_CASE("initialization is deterministic with the documented shapes") {
    const Topology t = Topology::parse("6:15:30:12");
    const MlpNetwork a = init_network(t, 42);
    const MlpNetwork b = init_network(t, 42);
    REQUIRE(a.n_layers() == 3);
    CHECK(a.weights[0].rows() == 15);
    CHECK(a.weights[0].cols() == 6);
    CHECK(a.weights[1].rows() == 30);
    CHECK(a.weights[1].cols() == 15);
    CHECK(a.weights[2].rows() == 12);
    CHECK(a.weights[2].cols() == 30);
    for (int l = 0; l < 3; ++l) {
        CHECK(a.weights[l] == b.weights[l]);
        CHECK(a.biases[l].isZero(0.0));
        CHECK(a.prev_dw[l].isZero(0.0));
        // fan-in scaled uniform start
        CHECK(a.weights[l].cwiseAbs().maxCoeff() <= 0.5 / std::sqrt(double(a.weights[l].cols())));
    }
    const MlpNetwork c = init_network(t, 43);
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("a zero network outputs one half everywhere") {
    MlpNetwork net = make_network({4, 3, 2}, 1);
    for (auto& w : net.weights) w.setZero();
    const auto out = forward_pass(net, Eigen::Vector4d(1, -2, 3, -4)).output();
    for (int i = 0; i < 2; ++i) CHECK(out[i] == 0.5);
}

TEST_CASE("log-sigmoid saturates toward 0 and 1") {
    MlpNetwork net = make_network({1, 1}, 1);
    net.weights[0](0, 0) = 1.0;
    net.biases[0][0] = 0.0;
    Eigen::VectorXd hot(1), cold(1);
    hot << 50.0;
    cold << -50.0;
    CHECK(forward_pass(net, hot).output()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(forward_pass(net, cold).output()[0] < 1e-12);
}

TEST_CASE("forward pass matches an explicit hand computation") {
    MlpNetwork net = make_network({2, 2, 1}, 1);
    net.weights[0] << 0.5, -0.25, 0.1, 0.2;
    net.biases[0] << 0.1, -0.1;
    net.weights[1] << 0.3, -0.4;
    net.biases[1] << 0.05;

    Eigen::Vector2d x(1.0, 2.0);
    const double h1 = sigmoid(0.5 * 1.0 - 0.25 * 2.0 + 0.1);   // 0.1
    const double h2 = sigmoid(0.1 * 1.0 + 0.2 * 2.0 - 0.1);    // 0.4
    const double o = sigmoid(0.3 * h1 - 0.4 * h2 + 0.05);

    const ForwardResult fr = forward_pass(net, x);
    REQUIRE(fr.activations.size() == 3);
    CHECK(fr.activations[1][0] == doctest::Approx(h1).epsilon(1e-15));
    CHECK(fr.activations[1][1] == doctest::Approx(h2).epsilon(1e-15));
    CHECK(fr.output()[0] == doctest::Approx(o).epsilon(1e-15));
}

TEST_CASE("a single momentum-free update applies eta delta o") {
    MlpNetwork net = make_network({1, 1}, 1, Activation::identity, Activation::identity);
    net.weights[0](0, 0) = 0.0;
    net.biases[0][0] = 0.0;
    Eigen::VectorXd x(1), t(1);
    x << 2.0;
    t << 1.0;
    // o = 0, delta = t - o = 1: dw = 0.1 * 1 * 2, db = 0.1
    const double sse = backprop_update(net, x, t, 0.1, 0.0);
    CHECK(sse == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(net.weights[0](0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(net.biases[0][0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(net.prev_dw[0](0, 0) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("momentum replays half the previous correction") {
    MlpNetwork a = make_network({2, 3, 2}, 5);
    MlpNetwork b = a;
    Eigen::Vector2d x(0.3, 0.7), t(0.2, 0.8);
    backprop_update(a, x, t, 0.1, 0.0);
    backprop_update(b, x, t, 0.1, 0.0);
    // second step from identical states: momentum adds alpha * prev_dw
    MlpNetwork a2 = a;
    backprop_update(a, x, t, 0.1, 0.0);
    backprop_update(b, x, t, 0.1, 0.5);
    const Eigen::MatrixXd diff = b.weights[0] - a.weights[0];
    CHECK(diff.isApprox(0.5 * a2.prev_dw[0], 1e-12));
}

TEST_CASE("the analytic gradient matches central finite differences") {
    MlpNetwork net = make_network({6, 5, 5, 12}, 99);
    RandomStream rng(4);
    Eigen::VectorXd x(6), t(12);
    for (int i = 0; i < 6; ++i) x[i] = rng.uniform(0.1, 0.9);
    for (int i = 0; i < 12; ++i) t[i] = rng.uniform(0.1, 0.9);

    const SseGradient grad = backprop_gradient(net, x, t);
    const double eps = 1e-6;
    auto half_sse = [&](const MlpNetwork& n) {
        const Eigen::VectorXd o = forward_pass(n, x).output();
        return 0.5 * (t - o).squaredNorm();
    };

    int checked = 0;
    for (int l = 0; l < net.n_layers(); ++l) {
        for (int probe = 0; probe < 34; ++probe) {
            const int r = static_cast<int>(rng.uniform(0.0, double(net.weights[l].rows()) - 1e-9));
            const int c = static_cast<int>(rng.uniform(0.0, double(net.weights[l].cols()) - 1e-9));
            MlpNetwork plus = net, minus = net;
            plus.weights[l](r, c) += eps;
            minus.weights[l](r, c) -= eps;
            const double fd = (half_sse(plus) - half_sse(minus)) / (2 * eps);
            CHECK(grad.dw[l](r, c) == doctest::Approx(fd).epsilon(1e-5));
            ++checked;
        }
        MlpNetwork plus = net, minus = net;
        plus.biases[l][0] += eps;
        minus.biases[l][0] -= eps;
        const double fd = (half_sse(plus) - half_sse(minus)) / (2 * eps);
        CHECK(grad.db[l][0] == doctest::Approx(fd).epsilon(1e-5));
    }
    CHECK(checked >= 100);
}

TEST_CASE("training configuration bounds are enforced") {
    TrainingConfig cfg;
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.max_iterations = 10;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.eta = 0.1;
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("one epoch visits every pattern once") {
    MlpNetwork net = make_network({2, 4, 2}, 3);
    std::vector<ScaledPair> set;
    for (int k = 0; k < 7; ++k) {
        ScaledPair p;
        p.input = Eigen::Vector2d(0.1 + 0.1 * k, 0.9 - 0.1 * k);
        p.target = Eigen::Vector2d(0.5, 0.5);
        set.push_back(p);
    }
    TrainingConfig cfg;
    cfg.max_iterations = 1;
    const TrainHistory h = train(net, set, set, cfg);
    REQUIRE(h.train_sse.size() == 1);
    REQUIRE(h.activation_sse.size() == 1);

    // the same seven updates in some order: the per-epoch SSE equals the sum
    // over patterns regardless of shuffle, and the run is reproducible
    MlpNetwork net2 = make_network({2, 4, 2}, 3);
    const TrainHistory h2 = train(net2, set, set, cfg);
    CHECK(h.train_sse[0] == h2.train_sse[0]);
    CHECK(net.weights[1] == net2.weights[1]);
}

TEST_CASE("training histories are deterministic per seed") {
    const auto pairs = diagonal_pairs(20, 2.0, 8);
    const Scaler sc = Scaler::fit(pairs);
    const auto scaled = scale_pairs(sc, pairs);
    TrainingConfig cfg;
    cfg.max_iterations = 50;
    cfg.seed = 17;
    MlpNetwork a = make_network({3, 6, 3}, 2);
    MlpNetwork b = make_network({3, 6, 3}, 2);
    const TrainHistory ha = train(a, scaled, scaled, cfg);
    const TrainHistory hb = train(b, scaled, scaled, cfg);
    CHECK(ha.train_sse == hb.train_sse);
    CHECK(ha.activation_sse == hb.activation_sse);

    cfg.seed = 18;
    MlpNetwork c = make_network({3, 6, 3}, 2);
    const TrainHistory hc = train(c, scaled, scaled, cfg);
    CHECK(ha.train_sse != hc.train_sse);  // shuffle order matters
}

TEST_CASE("the scaler maps into the band and round trips") {
    const auto pairs = diagonal_pairs(30, 2.0, 8);
    const Scaler sc = Scaler::fit(pairs);
    for (const auto& p : pairs) {
        const Eigen::VectorXd si = sc.scale_input(p.concentrations);
        const Eigen::VectorXd st = sc.scale_target(p.emissions);
        for (int j = 0; j < 3; ++j) {
            CHECK(si[j] >= 0.1);
            CHECK(si[j] <= 0.9);
            CHECK(st[j] >= 0.1);
            CHECK(st[j] <= 0.9);
        }
        const Eigen::VectorXd back = sc.unscale_target(st);
        const Eigen::VectorXd back_in = sc.unscale_input(si);
        for (int j = 0; j < 3; ++j) {
            CHECK(back[j] == doctest::Approx(p.emissions[j]).epsilon(1e-12));
            CHECK(back_in[j] == doctest::Approx(p.concentrations[j]).epsilon(1e-12));
        }
        CHECK(sc.input_in_hull(p.concentrations));
    }
    Eigen::VectorXd outside = pairs[0].concentrations;
    outside[0] = 1e9;
    CHECK_FALSE(sc.input_in_hull(outside));
}

TEST_CASE("a degenerate constant component still scales finitely") {
    std::vector<TrainingPair> pairs = diagonal_pairs(5, 2.0, 9);
    for (auto& p : pairs) {
        p.emissions[1] = 7.0;
        p.concentrations[1] = 14.0;
    }
    const Scaler sc = Scaler::fit(pairs);
    const Eigen::VectorXd st = sc.scale_target(pairs[0].emissions);
    CHECK(std::isfinite(st[1]));
    const Eigen::VectorXd back = sc.unscale_target(st);
    CHECK(back[1] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("the network learns a diagonal linear map") {
    const auto pairs = diagonal_pairs(20, 2.0, 31);
    const Scaler sc = Scaler::fit(pairs);
    const auto scaled = scale_pairs(sc, pairs);
    MlpNetwork net = make_network({3, 8, 8, 3}, 7);
    TrainingConfig cfg;
    cfg.max_iterations = 20000;
    cfg.seed = 5;
    const TrainHistory h = train(net, scaled, scaled, cfg);
    CHECK(h.train_sse.back() < 0.05);
    CHECK(h.train_sse.back() < 0.01 * h.train_sse.front());

    // memorization: inversion of a training observation recovers the rates
    // within 5% of the 30-unit scale
    const InversionResult inv = invert(net, sc, pairs[3].concentrations);
    CHECK_FALSE(inv.extrapolated);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(inv.rates[j] - pairs[3].emissions[j]) < 1.5);
        CHECK(inv.rates[j] >= 0.0);
    }
}

TEST_CASE("out-of-hull observations are flagged as extrapolation") {
    const auto pairs = diagonal_pairs(20, 2.0, 31);
    const Scaler sc = Scaler::fit(pairs);
    MlpNetwork net = make_network({3, 4, 3}, 7);
    Eigen::VectorXd far(3);
    far << 1e6, 1e6, 1e6;
    const InversionResult inv = invert(net, sc, far);
    CHECK(inv.extrapolated);
    for (int j = 0; j < 3; ++j) CHECK(inv.rates[j] >= 0.0);
}

TEST_CASE("network files round trip bit exactly") {
    const auto pairs = diagonal_pairs(10, 2.0, 12);
    const Scaler sc = Scaler::fit(pairs);
    const auto scaled = scale_pairs(sc, pairs);
    MlpNetwork net = init_network(Topology::parse("3:6:12:3"), 21);
    // trained weights exercise arbitrary doubles, not just the init grid
    TrainingConfig cfg;
    cfg.max_iterations = 25;
    train(net, scaled, scaled, cfg);

    const std::string path = (std::filesystem::temp_directory_path() / "srcinv_net.txt").string();
    save_network(net, sc, path);
    MlpNetwork back;
    Scaler sc_back;
    load_network(path, back, sc_back);
    std::filesystem::remove(path);

    REQUIRE(back.n_layers() == net.n_layers());
    for (int l = 0; l < net.n_layers(); ++l) {
        CHECK(back.weights[l] == net.weights[l]);
        CHECK(back.biases[l] == net.biases[l]);
        CHECK(back.activations[l] == net.activations[l]);
        CHECK(back.prev_dw[l].isZero(0.0));  // momentum state is not persisted
    }
    CHECK(sc_back.in_min == sc.in_min);
    CHECK(sc_back.out_max == sc.out_max);
    CHECK(sc_back.lo == sc.lo);

    Eigen::Vector3d probe(0.2, 0.5, 0.8);
    CHECK(forward_pass(back, probe).output() == forward_pass(net, probe).output());
}
