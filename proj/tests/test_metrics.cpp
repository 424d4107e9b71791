#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "protoprune/metrics.hpp"

using namespace protoprune;

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 1, 1, 0}, {0, 1, 1, 0}) == 1.0);
    CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(accuracy({0}, {0, 1}), DimensionMismatchError);
}

TEST_CASE("f1_macro closed forms") {
    SUBCASE("perfect predictions") {
        CHECK(f1_macro({0, 1, 0, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(1.0));
    }
    SUBCASE("collapsed predictions on a balanced set") {
        // Class 0: precision 1/2, recall 1 -> F1 2/3. Class 1: F1 0.
        CHECK(f1_macro({0, 0, 0, 0}, {0, 0, 1, 1}, 2) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("class absent from labels and predictions scores zero") {
        CHECK(f1_macro({0, 0}, {0, 0}, 2) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("best_permutation_match") {
    // Cluster ids are an inverted labeling of a 2-class problem.
    const std::vector<int> clusters{1, 1, 0, 0};
    const std::vector<int> labels{0, 0, 1, 1};
    const PermutationMatch match = best_permutation_match(clusters, labels, 2);
    CHECK(match.accuracy == doctest::Approx(1.0));
    CHECK(match.permutation == std::vector<int>{1, 0});

    const PermutationMatch identity = best_permutation_match(labels, labels, 2);
    CHECK(identity.accuracy == doctest::Approx(1.0));
    CHECK(identity.permutation == std::vector<int>{0, 1});
}
