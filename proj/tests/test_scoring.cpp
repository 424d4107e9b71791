#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "protoprune/scoring.hpp"
#include "support/test_util.hpp"

using namespace protoprune;

namespace {

PrototypeBank axis_bank() {
    PrototypeBank bank(2, 1, 2);
    bank.proto(0, 0) = EmbeddingPoint{(Vec(2) << 1, 0).finished()};
    bank.proto(1, 0) = EmbeddingPoint{(Vec(2) << -1, 0).finished()};
    return bank;
}

EmbeddingPoint unit_with_dot(const Vec& p, double dot, Rng& rng) {
    // Unit vector at a prescribed dot product with unit p.
    Vec ortho(p.size());
    for (int d = 0; d < p.size(); ++d) ortho[d] = rng.normal();
    ortho -= p * p.dot(ortho);
    ortho.normalize();
    return EmbeddingPoint{dot * p + std::sqrt(1.0 - dot * dot) * ortho};
}

}  // namespace

TEST_CASE("outlier_score closed forms") {
    Rng rng(31);
    const ScoringConfig cfg{1e-6, 1e-3, true};

    SUBCASE("on the prototype the score is zero") {
        const PrototypeBank bank = axis_bank();
        CHECK(outlier_score(bank.proto(0, 0), 0, bank, cfg) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("K=1 reduces to squared distance over ridge") {
        const PrototypeBank bank = axis_bank();
        // dot 0.96 gives squared distance 2 - 2*0.96 = 0.08.
        const EmbeddingPoint z = unit_with_dot(bank.proto(0, 0).vec, 0.96, rng);
        CHECK((z.vec - bank.proto(0, 0).vec).squaredNorm() == doctest::Approx(0.08).epsilon(1e-12));
        CHECK(outlier_score(z, 0, bank, cfg) == doctest::Approx(80.0).epsilon(1e-9));

        ScoringConfig doubled = cfg;
        doubled.ridge *= 2.0;
        CHECK(outlier_score(z, 0, bank, doubled) == doctest::Approx(40.0).epsilon(1e-9));
    }
    SUBCASE("bad label throws") {
        const PrototypeBank bank = axis_bank();
        CHECK_THROWS_AS(outlier_score(bank.proto(0, 0), 5, bank, cfg), BadLabelError);
    }
    SUBCASE("monotone in distance to the own prototype when K=1") {
        const PrototypeBank bank = axis_bank();
        double prev = -1.0;
        for (double dot = 0.95; dot > -0.95; dot -= 0.05) {
            const EmbeddingPoint z = unit_with_dot(bank.proto(0, 0).vec, dot, rng);
            const double score = outlier_score(z, 0, bank, cfg);
            CHECK(score > prev);
            prev = score;
        }
    }
}

TEST_CASE("familiarity_score closed forms") {
    const PrototypeBank bank = axis_bank();
    const HypersphereConfig hcfg{2, 1.0, 1.0};

    SUBCASE("at the own prototype, antipodal other") {
        CHECK(familiarity_score(bank.proto(0, 0), 0, bank, hcfg) ==
              doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    }
    SUBCASE("equidistant point scores one") {
        const EmbeddingPoint mid{(Vec(2) << 0, 1).finished()};
        CHECK(familiarity_score(mid, 0, bank, hcfg) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("at the other class's prototype") {
        CHECK(familiarity_score(bank.proto(1, 0), 0, bank, hcfg) ==
              doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    }
    SUBCASE("single class throws") {
        PrototypeBank single(1, 1, 2);
        single.protos[0] = EmbeddingPoint{(Vec(2) << 1, 0).finished()};
        CHECK_THROWS_AS(familiarity_score(single.protos[0], 0, single, hcfg),
                        SingleClassError);
    }
}

TEST_CASE("balance_score") {
    SUBCASE("single cluster pool") {
        const std::vector<int> assignments(12, 3);
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            CHECK(balance_score(i, assignments) == doctest::Approx(1.0));
        }
    }
    SUBCASE("singleton cluster in a pool of ten") {
        std::vector<int> assignments(10, 0);
        assignments[7] = 1;
        CHECK(balance_score(7, assignments) == doctest::Approx(0.1));
        CHECK(balance_score(0, assignments) == doctest::Approx(0.9));
    }
    SUBCASE("cluster population identity") {
        Rng rng(32);
        std::vector<int> assignments;
        for (int i = 0; i < 40; ++i) assignments.push_back(static_cast<int>(rng.index(5)));
        double total = 0.0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            total += balance_score(i, assignments);
        }
        std::vector<int> counts(5, 0);
        for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
        double expected = 0.0;
        for (int c : counts) expected += static_cast<double>(c) * c / 40.0;
        CHECK(total == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("nearest_prototype_index prefers the largest dot, lowest index on ties") {
    const PrototypeBank bank = axis_bank();
    CHECK(nearest_prototype_index(EmbeddingPoint{(Vec(2) << 1, 0).finished()}, bank) == 0);
    CHECK(nearest_prototype_index(EmbeddingPoint{(Vec(2) << -1, 0).finished()}, bank) == 1);
    CHECK(nearest_prototype_index(EmbeddingPoint{(Vec(2) << 0, 1).finished()}, bank) == 0);
}

TEST_CASE("sigmoid_transform") {
    SUBCASE("zero-variance pool maps to one half") {
        const std::vector<double> out = sigmoid_transform({4.2, 4.2, 4.2}, true);
        for (double x : out) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("raw zero without standardization") {
        CHECK(sigmoid_transform({0.0}, false)[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("already standardized pair") {
        const std::vector<double> out = sigmoid_transform({-1.0, 1.0}, true);
        CHECK(out[0] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
        CHECK(out[0] == doctest::Approx(0.2689).epsilon(1e-3));
        CHECK(out[1] == doctest::Approx(0.7311).epsilon(1e-3));
    }
}

TEST_CASE("sampling_weights") {
    const ScoringConfig cfg{1e-6, 1e-3, true};

    SUBCASE("identical samples get identical weights") {
        const std::vector<SampleScores> scores =
            sampling_weights({3.0, 3.0}, {0.4, 0.4}, {0.5, 0.5}, cfg);
        CHECK(scores[0].weight == scores[1].weight);
        CHECK(scores[0].weight > 0.0);
    }
    SUBCASE("dominating sample wins") {
        // Sample 0: less familiar (higher raw familiarity), less risky,
        // more of a minority than sample 1 on every raw score.
        const std::vector<SampleScores> scores =
            sampling_weights({1.0, 5.0}, {2.0, 0.5}, {0.2, 0.8}, cfg);
        CHECK(scores[0].weight > scores[1].weight);
    }
    SUBCASE("flat transformed scores hit the closed form") {
        // All-equal raw vectors standardize to 0.5 after the sigmoid.
        const std::vector<SampleScores> scores =
            sampling_weights({7.0, 7.0}, {1.0, 1.0}, {0.3, 0.3}, cfg);
        const double expected = 0.5 / ((0.5 + cfg.epsilon) * (0.5 + cfg.epsilon));
        CHECK(scores[0].weight == doctest::Approx(expected).epsilon(1e-12));
        CHECK(scores[0].weight == doctest::Approx(2.0).epsilon(1e-5));
    }
    SUBCASE("finite and positive under extreme magnitudes") {
        Rng rng(33);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> r(6), e(6), b(6);
            for (int i = 0; i < 6; ++i) {
                r[static_cast<std::size_t>(i)] = rng.uniform(-1e6, 1e6);
                e[static_cast<std::size_t>(i)] = rng.uniform(-1e6, 1e6);
                b[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
            }
            for (const SampleScores& s : sampling_weights(r, e, b, cfg)) {
                CHECK(std::isfinite(s.weight));
                CHECK(s.weight > 0.0);
            }
        }
    }
    SUBCASE("weight moves the right way under single-sample perturbations") {
        Rng rng(34);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 5;
            std::vector<double> r(n), e(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = rng.uniform(-2.0, 2.0);
                e[i] = rng.uniform(-2.0, 2.0);
                b[i] = rng.uniform(0.1, 1.0);
            }
            const std::size_t target = rng.index(n);
            const double base = sampling_weights(r, e, b, cfg)[target].weight;

            auto bumped = [&](std::vector<double> v, double delta,
                              const std::vector<double>& a, const std::vector<double>& c,
                              int which) {
                v[target] += delta;
                if (which == 0) return sampling_weights(v, a, c, cfg)[target].weight;
                if (which == 1) return sampling_weights(a, v, c, cfg)[target].weight;
                return sampling_weights(a, c, v, cfg)[target].weight;
            };
            CHECK(bumped(e, 0.5, r, b, 1) > base);   // more unfamiliar -> heavier
            CHECK(bumped(r, 0.5, e, b, 0) < base);   // riskier -> lighter
            CHECK(bumped(b, 0.25, r, e, 2) < base);  // more majority -> lighter
        }
    }
}
