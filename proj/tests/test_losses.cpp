#include <doctest.h>

#include <cmath>
#include <random>

#include "fedtype/losses.hpp"
#include "finite_diff.hpp"

using namespace fedtype;

TEST_CASE("cross entropy on uniform logits") {
    const auto lg = cross_entropy({0.0, 0.0}, 0);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(lg.dlogits[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(lg.dlogits[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cross entropy is stable for saturated logits") {
    const auto lg = cross_entropy({100.0, -100.0}, 0);
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    CHECK_THROWS_AS(cross_entropy({0.0, 0.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy({0.0, 0.0}, -1), std::invalid_argument);
}

TEST_CASE("forward kd vanishes for identical distributions") {
    const std::vector<double> logits{0.3, -1.2, 2.0};
    const auto lg = forward_kd(logits, logits);
    CHECK(lg.loss == doctest::Approx(0.0).epsilon(1e-12));
    for (double g : lg.dlogits) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("forward kd matches the direct KL evaluation") {
    // softmax(log p) = p, so logits = log of the target distributions
    const std::vector<double> teacher{std::log(2.0 / 3.0), std::log(1.0 / 3.0)};
    const std::vector<double> student{std::log(1.0 / 3.0), std::log(2.0 / 3.0)};
    const auto lg = forward_kd(teacher, student);
    CHECK(lg.loss == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("forward kd is non-negative and zero only at coinciding distributions") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> t(4), s(4);
        for (double& v : t) v = g(rng);
        for (double& v : s) v = g(rng);
        const double loss = forward_kd(t, s).loss;
        CHECK(loss >= -1e-12);
        const auto pt = softmax(t), ps = softmax(s);
        double gap = 0.0;
        for (int k = 0; k < 4; ++k) gap = std::max(gap, std::abs(pt[k] - ps[k]));
        if (gap > 1e-3) CHECK(loss > 0.0);
        if (loss <= 1e-12) CHECK(gap <= 1e-5);
    }
}

TEST_CASE("forward kd rejects length mismatch") {
    CHECK_THROWS_AS(forward_kd({0.0, 0.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("bkd loss examples") {
    const PredictionSet s0({0});
    auto lg = bkd_loss({0.0, 0.0}, s0, 1.0);
    CHECK(lg.loss == doctest::Approx(-std::log(0.5)).epsilon(1e-12));

    const PredictionSet s01({0, 1});
    lg = bkd_loss({0.0, 0.0}, s01, 1.0);
    CHECK(lg.loss == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("bkd loss degenerate inputs") {
    const PredictionSet empty;
    auto lg = bkd_loss({1.0, -1.0}, empty, 1.0);
    CHECK(lg.loss == 0.0);
    for (double g : lg.dlogits) CHECK(g == 0.0);

    lg = bkd_loss({1.0, -1.0}, PredictionSet({0}), 0.0);
    CHECK(lg.loss == 0.0);
    for (double g : lg.dlogits) CHECK(g == 0.0);

    CHECK_THROWS_AS(bkd_loss({0.0, 0.0}, PredictionSet({0}), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(bkd_loss({0.0, 0.0}, PredictionSet({0}), -0.1), std::invalid_argument);
}

TEST_CASE("bkd with the full label set is the negative log-softmax sum") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(5);
        for (double& v : logits) v = g(rng);
        const auto lg = bkd_loss(logits, PredictionSet({0, 1, 2, 3, 4}), 1.0);
        double expected = 0.0;
        const auto ls = log_softmax(logits);
        for (double v : ls) expected -= v;
        CHECK(lg.loss == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("raising a singleton-set logit strictly lowers the bkd loss") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> logits(4);
        for (double& v : logits) v = g(rng);
        const PredictionSet s({trial % 4});
        const double before = bkd_loss(logits, s, 1.0).loss;
        auto bumped = logits;
        bumped[trial % 4] += 0.25;
        CHECK(bkd_loss(bumped, s, 1.0).loss < before);
    }
}

TEST_CASE("bkd gradient on a set label is negative while its mass is below 1/|S|") {
    // The imitation term pulls up under-supported confident labels; once a
    // label already carries more than 1/|S| of the mass the shared normalizer
    // dominates and the pull reverses. The useful transfer regime is the
    // former, so that is what we pin down.
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.5);
    std::uniform_int_distribution<int> set_size(1, 4);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> logits(4);
        for (double& v : logits) v = g(rng);
        std::vector<int> labels;
        const int k = set_size(rng);
        for (int c = 0; c < k; ++c) labels.push_back(c);
        const PredictionSet s(std::move(labels));
        const auto lg = bkd_loss(logits, s, 1.0);
        const auto p = softmax(logits);
        for (int m : s.labels) {
            if (p[m] < 1.0 / static_cast<double>(s.size()) - 1e-9)
                CHECK(lg.dlogits[m] < 0.0);
        }
    }
}

TEST_CASE("bkd gradient matches finite differences on the logits") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> logits(5);
    for (double& v : logits) v = g(rng);
    const PredictionSet s({1, 3});
    const double eta = 0.6;
    const auto lg = bkd_loss(logits, s, eta);
    const auto fd = testutil::fd_logit_gradient(
        logits, [&](const std::vector<double>& l) { return bkd_loss(l, s, eta).loss; });
    CHECK(testutil::max_rel_err(lg.dlogits, fd) < 1e-4);
}

TEST_CASE("fedprox term") {
    const ParamVector local{1.0, -1.0};
    const ParamVector ref{0.0, 0.0};

    auto lg = fedprox_term(local, local, 2.0);
    CHECK(lg.loss == 0.0);
    for (double g : lg.dparams) CHECK(g == 0.0);

    lg = fedprox_term(local, ref, 0.0);
    CHECK(lg.loss == 0.0);

    lg = fedprox_term(local, ref, 2.0);
    CHECK(lg.loss == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lg.dparams[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lg.dparams[1] == doctest::Approx(-2.0).epsilon(1e-12));

    CHECK_THROWS_AS(fedprox_term({1.0}, {1.0, 2.0}, 1.0), std::invalid_argument);
}

TEST_CASE("composite with eta 0 reduces the private objective to plain CE") {
    const auto private_net = init_network({3, 6, 4}, 1);
    const auto proxy_net = init_network({3, 4, 4}, 2);
    const std::vector<double> x{0.2, -0.5, 1.0};
    const auto comp = composite_client_loss(x, 2, private_net, proxy_net, PredictionSet({0, 1}),
                                            PredictionSet({1}), 0.0, TrainMode::full);
    const auto ce = cross_entropy(forward_logits(private_net, x), 2);
    CHECK(comp.private_loss == doctest::Approx(ce.loss).epsilon(1e-12));
    for (std::size_t k = 0; k < ce.dlogits.size(); ++k)
        CHECK(comp.dlogits_private[k] == doctest::Approx(ce.dlogits[k]).epsilon(1e-12));
}

TEST_CASE("composite in sym mode collapses to CE when the nets agree") {
    const auto net = init_network({3, 5, 4}, 8);
    const std::vector<double> x{0.3, 0.1, -0.7};
    const auto comp = composite_client_loss(x, 1, net, net, PredictionSet(), PredictionSet(), 0.5,
                                            TrainMode::sym);
    const auto ce = cross_entropy(forward_logits(net, x), 1);
    CHECK(comp.private_loss == doctest::Approx(ce.loss).epsilon(1e-12));
    CHECK(comp.proxy_loss == doctest::Approx(ce.loss).epsilon(1e-12));
}

TEST_CASE("sym mode never touches the bkd path") {
    const auto private_net = init_network({3, 5, 4}, 8);
    const auto proxy_net = init_network({3, 4, 4}, 9);
    std::uint64_t bkd_evals = 0;
    composite_client_loss({0.1, 0.2, 0.3}, 0, private_net, proxy_net, PredictionSet({0}),
                          PredictionSet({0}), 1.0, TrainMode::sym, &bkd_evals);
    CHECK(bkd_evals == 0);
    composite_client_loss({0.1, 0.2, 0.3}, 0, private_net, proxy_net, PredictionSet({0}),
                          PredictionSet({0}), 1.0, TrainMode::full, &bkd_evals);
    CHECK(bkd_evals == 1);
}

TEST_CASE("composite gradients match finite differences in full mode") {
    const auto private_net = init_network({4, 6, 3}, 31);
    const auto proxy_net = init_network({4, 5, 3}, 32);
    const std::vector<double> x{0.5, -0.25, 0.75, -1.0};
    const int label = 0;
    const PredictionSet s({0, 2});
    const PredictionSet l({0});
    const double eta = 0.8;

    const auto comp =
        composite_client_loss(x, label, private_net, proxy_net, s, l, eta, TrainMode::full);
    const auto grad_private = backward(private_net, x, comp.dlogits_private);
    const auto grad_proxy = backward(proxy_net, x, comp.dlogits_proxy);

    // The private objective sees the proxy only through detached constants.
    const auto fd_private = testutil::fd_param_gradient(private_net, [&](const DenseNet& n) {
        const auto logits = forward_logits(n, x);
        return cross_entropy(logits, label).loss + bkd_loss(logits, s, eta).loss;
    });
    CHECK(testutil::max_rel_err(grad_private, fd_private) < 1e-4);

    const auto teacher_logits = forward_logits(private_net, x);
    const auto fd_proxy = testutil::fd_param_gradient(proxy_net, [&](const DenseNet& n) {
        const auto logits = forward_logits(n, x);
        return cross_entropy(logits, label).loss + forward_kd(teacher_logits, logits).loss;
    });
    CHECK(testutil::max_rel_err(grad_proxy, fd_proxy) < 1e-4);
}

TEST_CASE("train mode names round-trip") {
    for (auto mode : {TrainMode::full, TrainMode::sym, TrainMode::topk, TrainMode::eta1,
                      TrainMode::g05})
        CHECK(parse_train_mode(to_string(mode)) == mode);
    CHECK_THROWS_AS(parse_train_mode("bogus"), std::invalid_argument);
}
