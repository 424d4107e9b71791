#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "protoprune/encoder.hpp"
#include "support/test_util.hpp"

using namespace protoprune;

namespace {

GraphSample random_graph(int nodes, int features, Rng& rng) {
    GraphSample g;
    g.adjacency = Mat::Zero(nodes, nodes);
    for (int u = 0; u < nodes; ++u) {
        for (int v = u + 1; v < nodes; ++v) {
            if (rng.uniform() < 0.4) {
                g.adjacency(u, v) = 1.0;
                g.adjacency(v, u) = 1.0;
            }
        }
    }
    g.features = Mat(nodes, features);
    for (int v = 0; v < nodes; ++v) {
        for (int f = 0; f < features; ++f) g.features(v, f) = rng.normal();
    }
    return g;
}

PrototypeBank random_bank(int C, int K, int D, Rng& rng) {
    PrototypeBank bank(C, K, D);
    for (int i = 0; i < bank.size(); ++i) bank.protos[i] = test_util::random_unit(D, rng);
    return bank;
}

struct FdScene {
    std::vector<GraphSample> graphs;
    std::vector<int> labels;
    EncoderParams params;
    PrototypeBank bank;
    HypersphereConfig hcfg;
    LossWeights weights;
};

double scene_loss(FdScene& s) {
    std::vector<GraphForward> forwards;
    for (const GraphSample& g : s.graphs) forwards.push_back(forward(g, s.params));
    return compute_losses(forwards, s.labels, s.bank, s.hcfg, s.weights, TrainMode::Supervised,
                          nullptr)
        .total;
}

// Finite-difference check of every trainable scalar in the scene.
void check_scene_gradients(FdScene& s) {
    std::vector<GraphForward> forwards;
    for (const GraphSample& g : s.graphs) forwards.push_back(forward(g, s.params));
    const BackwardResult result = backward(forwards, s.labels, s.params, s.bank, s.hcfg,
                                           s.weights, TrainMode::Supervised, nullptr);
    auto loss = [&]() { return scene_loss(s); };

    for (std::size_t l = 0; l < s.params.layers.size(); ++l) {
        Mat& w = s.params.layers[l];
        for (int r = 0; r < w.rows(); ++r) {
            for (int c = 0; c < w.cols(); ++c) {
                const double fd = test_util::central_diff(loss, &w(r, c));
                CHECK(test_util::grad_close(result.encoder.layers[l](r, c), fd));
            }
        }
    }
    for (int r = 0; r < s.params.proj.rows(); ++r) {
        for (int c = 0; c < s.params.proj.cols(); ++c) {
            const double fd = test_util::central_diff(loss, &s.params.proj(r, c));
            CHECK(test_util::grad_close(result.encoder.proj(r, c), fd));
        }
    }
    for (int r = 0; r < s.params.head.rows(); ++r) {
        for (int c = 0; c < s.params.head.cols(); ++c) {
            const double fd = test_util::central_diff(loss, &s.params.head(r, c));
            CHECK(test_util::grad_close(result.encoder.head(r, c), fd));
        }
    }
    for (int p = 0; p < s.bank.size(); ++p) {
        for (int d = 0; d < s.bank.dim(); ++d) {
            const double fd = test_util::central_diff(loss, &s.bank.protos[p].vec[d]);
            CHECK(test_util::grad_close(result.proto[p][d], fd));
        }
    }
}

}  // namespace

TEST_CASE("forward on a single self-loop node is a plain ReLU") {
    GraphSample g;
    g.adjacency = Mat::Zero(1, 1);
    g.features = (Mat(1, 3) << -0.5, 0.0, 2.0).finished();

    EncoderParams params;
    params.layers = {Mat::Identity(3, 3)};
    params.proj = Mat::Identity(3, 3);
    params.head = Mat::Zero(3, 2);

    const GraphForward fw = forward(g, params);
    CHECK(fw.h.isApprox((Vec(3) << 0.0, 0.0, 2.0).finished()));
}

TEST_CASE("forward is invariant to node relabeling") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const GraphSample g = random_graph(7, 4, rng);
        const EncoderParams params = init_encoder(4, 6, 2, 5, 2, rng.raw());

        std::vector<int> perm(7);
        for (int i = 0; i < 7; ++i) perm[static_cast<std::size_t>(i)] = i;
        rng.shuffle(perm);
        GraphSample shuffled = g;
        for (int u = 0; u < 7; ++u) {
            shuffled.features.row(perm[static_cast<std::size_t>(u)]) = g.features.row(u);
            for (int v = 0; v < 7; ++v) {
                shuffled.adjacency(perm[static_cast<std::size_t>(u)],
                                   perm[static_cast<std::size_t>(v)]) = g.adjacency(u, v);
            }
        }
        const GraphForward a = forward(g, params);
        const GraphForward b = forward(shuffled, params);
        CHECK((a.h - b.h).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("zero weights produce zero logits") {
    GraphSample g;
    g.adjacency = Mat::Zero(2, 2);
    g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
    g.features = Mat::Ones(2, 3);

    EncoderParams params;
    params.layers = {Mat::Zero(3, 4)};
    params.proj = Mat::Zero(4, 3);
    params.head = Mat::Zero(3, 2);

    const GraphForward fw = forward(g, params);
    CHECK(fw.logits.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fw.degenerate);
    CHECK(std::abs(fw.z.vec.norm() - 1.0) < 1e-12);
}

TEST_CASE("empty graph is rejected") {
    GraphSample g;
    g.adjacency = Mat::Zero(0, 0);
    g.features = Mat::Zero(0, 2);
    EncoderParams params;
    params.layers = {Mat::Zero(2, 2)};
    params.proj = Mat::Zero(2, 2);
    params.head = Mat::Zero(2, 2);
    CHECK_THROWS_AS(forward(g, params), EmptyGraphError);
}

TEST_CASE("task_loss closed forms") {
    CHECK(task_loss((Vec(2) << 0.3, 0.3).finished(), 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(task_loss((Vec(2) << 10, -10).finished(), 0) ==
          doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-6));
    CHECK(task_loss((Vec(2) << 10, -10).finished(), 0) == doctest::Approx(2.061e-9).epsilon(1e-2));
    CHECK(task_loss((Vec(2) << 10, -10).finished(), 1) ==
          doctest::Approx(20.0 + std::log1p(std::exp(-20.0))).epsilon(1e-12));
    CHECK_THROWS_AS(task_loss((Vec(2) << 1, 2).finished(), 2), BadLabelError);
}

TEST_CASE("backward matches finite differences on the full loss") {
    Rng rng(72);
    for (int trial = 0; trial < 8; ++trial) {
        FdScene s;
        const int F = 2 + static_cast<int>(rng.index(2));
        const int C = 2 + static_cast<int>(rng.index(2));
        const int D = 3 + static_cast<int>(rng.index(2));
        const int K = 1 + static_cast<int>(rng.index(2));
        const int L = 1 + static_cast<int>(rng.index(2));
        for (int i = 0; i < 3; ++i) {
            s.graphs.push_back(random_graph(3 + static_cast<int>(rng.index(4)), F, rng));
            s.labels.push_back(static_cast<int>(rng.index(C)));
        }
        s.params = init_encoder(F, 4, L, D, C, rng.raw());
        s.bank = random_bank(C, K, D, rng);
        s.hcfg = HypersphereConfig{D, 1.0, rng.uniform(0.4, 1.5)};
        s.weights = LossWeights{rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5), 0.0};
        check_scene_gradients(s);
    }
}

TEST_CASE("backward with zero prototype weights is the task gradient") {
    Rng rng(73);
    FdScene s;
    for (int i = 0; i < 2; ++i) {
        s.graphs.push_back(random_graph(4, 3, rng));
        s.labels.push_back(static_cast<int>(rng.index(2)));
    }
    s.params = init_encoder(3, 4, 2, 4, 2, 99);
    s.bank = random_bank(2, 1, 4, rng);
    s.hcfg = HypersphereConfig{4, 1.0, 1.0};
    s.weights = LossWeights{0.0, 0.0, 0.0};
    check_scene_gradients(s);
}

TEST_CASE("duplicated graph doubles its contribution to the gradient numerator") {
    Rng rng(74);
    const GraphSample a = random_graph(5, 3, rng);
    const GraphSample b = random_graph(6, 3, rng);
    const EncoderParams params = init_encoder(3, 4, 2, 4, 2, 17);
    PrototypeBank bank = random_bank(2, 2, 4, rng);
    const HypersphereConfig hcfg{4, 1.0, 0.8};
    const LossWeights weights{0.3, 0.2, 0.0};

    auto grads_scaled = [&](const std::vector<const GraphSample*>& graphs,
                            const std::vector<int>& labels) {
        std::vector<GraphForward> forwards;
        for (const GraphSample* g : graphs) forwards.push_back(forward(*g, params));
        BackwardResult r = backward(forwards, labels, params, bank, hcfg, weights,
                                    TrainMode::Supervised, nullptr);
        const double n = static_cast<double>(graphs.size());
        for (Mat& m : r.encoder.layers) m *= n;
        r.encoder.proj *= n;
        r.encoder.head *= n;
        for (Vec& v : r.proto) v *= n;
        return r;
    };

    const BackwardResult two = grads_scaled({&a, &b}, {0, 1});
    const BackwardResult three = grads_scaled({&a, &b, &b}, {0, 1, 1});
    const BackwardResult solo = grads_scaled({&b}, {1});

    for (std::size_t l = 0; l < two.encoder.layers.size(); ++l) {
        const Mat expected = two.encoder.layers[l] + solo.encoder.layers[l];
        CHECK((three.encoder.layers[l] - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK((three.encoder.proj - (two.encoder.proj + solo.encoder.proj)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((three.encoder.head - (two.encoder.head + solo.encoder.head)).cwiseAbs().maxCoeff() <
          1e-10);
    for (int p = 0; p < bank.size(); ++p) {
        CHECK((three.proto[p] - (two.proto[p] + solo.proto[p])).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("loss report total matches its decomposition") {
    Rng rng(75);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<GraphForward> forwards;
        std::vector<int> labels;
        const EncoderParams params = init_encoder(3, 5, 2, 4, 2, rng.raw());
        const PrototypeBank bank = random_bank(2, 2, 4, rng);
        const HypersphereConfig hcfg{4, 1.0, 0.8};
        const LossWeights weights{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 0.0};
        for (int i = 0; i < 3; ++i) {
            GraphSample g = random_graph(4, 3, rng);
            forwards.push_back(forward(g, params));
            labels.push_back(static_cast<int>(rng.index(2)));
        }
        const LossReport report = compute_losses(forwards, labels, bank, hcfg, weights,
                                                 TrainMode::Supervised, nullptr);
        const double recombined = report.task + weights.lambda1 * report.compactness +
                                  weights.lambda2 * report.separation +
                                  weights.lambda3 * report.contrastive;
        CHECK(std::abs(report.total - recombined) < 1e-12);
    }
}

TEST_CASE("sgd_step") {
    EncoderParams params;
    params.layers = {Mat::Constant(1, 1, 0.5)};
    params.proj = Mat::Constant(1, 2, 0.5);
    params.head = Mat::Constant(2, 1, 0.5);

    EncoderGrads zero;
    zero.layers = {Mat::Zero(1, 1)};
    zero.proj = Mat::Zero(1, 2);
    zero.head = Mat::Zero(2, 1);
    EncoderParams copy = params;
    sgd_step(copy, zero, 1.0);
    CHECK(copy.layers[0] == params.layers[0]);

    EncoderGrads g;
    g.layers = {Mat::Constant(1, 1, 0.2)};
    g.proj = Mat::Constant(1, 2, 0.2);
    g.head = Mat::Constant(2, 1, 0.2);
    sgd_step(copy, g, 1.0);
    CHECK(copy.layers[0](0, 0) == doctest::Approx(0.3).epsilon(1e-15));

    // Two steps with fixed grads equal one step with the summed grads.
    EncoderParams twice = params;
    sgd_step(twice, g, 0.1);
    sgd_step(twice, g, 0.1);
    EncoderParams once = params;
    EncoderGrads doubled = g;
    doubled.layers[0] *= 2.0;
    doubled.proj *= 2.0;
    doubled.head *= 2.0;
    sgd_step(once, doubled, 0.1);
    CHECK((twice.layers[0] - once.layers[0]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((twice.proj - once.proj).cwiseAbs().maxCoeff() < 1e-15);
}
