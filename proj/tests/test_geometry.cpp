#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "protoprune/geometry.hpp"
#include "support/test_util.hpp"

using namespace protoprune;

TEST_CASE("project_to_sphere basics") {
    Vec axis(4);
    axis << 3, 0, 0, 0;
    CHECK(project_to_sphere(axis).vec.isApprox((Vec(4) << 1, 0, 0, 0).finished()));

    Vec diag(4);
    diag << 1, 1, 0, 0;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(project_to_sphere(diag).vec.isApprox(
        (Vec(4) << inv_sqrt2, inv_sqrt2, 0, 0).finished()));

    CHECK_THROWS_AS(project_to_sphere(Vec::Zero(4)), ZeroVectorError);
}

TEST_CASE("project_to_sphere is idempotent") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const EmbeddingPoint z = test_util::random_unit(6, rng);
        const EmbeddingPoint again = project_to_sphere(z.vec);
        CHECK((again.vec - z.vec).norm() < 1e-12);
        CHECK(std::abs(z.vec.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("angular affinity and distance") {
    Rng rng(12);
    const EmbeddingPoint z = test_util::random_unit(5, rng);
    const EmbeddingPoint neg{-z.vec};

    CHECK(angular_affinity(z, z, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(angular_affinity(neg, z, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    EmbeddingPoint ex{(Vec(2) << 1, 0).finished()};
    EmbeddingPoint ey{(Vec(2) << 0, 1).finished()};
    CHECK(angular_affinity(ex, ey, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(angular_distance(ex, ey, 7.3) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(angular_distance(z, z, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(angular_distance(neg, z, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    EmbeddingPoint other_dim{Vec::Ones(3) / std::sqrt(3.0)};
    CHECK_THROWS_AS(angular_affinity(z, other_dim, 1.0), DimensionMismatchError);
    CHECK_THROWS_AS(angular_distance(z, other_dim, 1.0), DimensionMismatchError);
}

TEST_CASE("affinity times distance is one; affinity symmetric") {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const EmbeddingPoint p = test_util::random_unit(7, rng);
        const EmbeddingPoint z = test_util::random_unit(7, rng);
        const double kappa = rng.uniform(0.1, 4.0);
        CHECK(std::abs(angular_affinity(p, z, kappa) * angular_distance(p, z, kappa) - 1.0) <
              1e-12);
        CHECK(angular_affinity(p, z, kappa) ==
              doctest::Approx(angular_affinity(z, p, kappa)).epsilon(1e-15));
    }
}

TEST_CASE("mahalanobis_sq") {
    EmbeddingPoint p{(Vec(2) << 1, 0).finished()};
    CHECK(mahalanobis_sq(p, p, Mat::Identity(2, 2)) == 0.0);

    // Identity covariance reduces to the squared Euclidean norm.
    EmbeddingPoint a{(Vec(2) << 0.3, 0.4).finished()};
    EmbeddingPoint origin{Vec::Zero(2)};
    CHECK(mahalanobis_sq(a, origin, Mat::Identity(2, 2)) == doctest::Approx(0.25).epsilon(1e-12));

    Mat diag = Mat::Zero(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 1.0;
    EmbeddingPoint b{(Vec(2) << 0.5, 1.0).finished()};
    CHECK(mahalanobis_sq(b, origin, diag) == doctest::Approx(2.0).epsilon(1e-12));

    EmbeddingPoint c{Vec::Zero(3)};
    CHECK_THROWS_AS(mahalanobis_sq(b, c, diag), DimensionMismatchError);
    CHECK_THROWS_AS(mahalanobis_sq(b, origin, Mat::Identity(3, 3)), DimensionMismatchError);
}

TEST_CASE("mahalanobis with identity equals squared euclidean on random input") {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const EmbeddingPoint z = test_util::random_unit(6, rng);
        const EmbeddingPoint p = test_util::random_unit(6, rng);
        const double expected = (z.vec - p.vec).squaredNorm();
        CHECK(std::abs(mahalanobis_sq(z, p, Mat::Identity(6, 6)) - expected) < 1e-12);
    }
}

TEST_CASE("regularized_cov_inverse") {
    SUBCASE("single point gives identity at ridge one") {
        const std::vector<Vec> points{(Vec(3) << 0.2, -0.4, 0.9).finished()};
        CHECK(regularized_cov_inverse(points, 1.0).isApprox(Mat::Identity(3, 3), 1e-12));
    }
    SUBCASE("two opposite points") {
        const std::vector<Vec> points{(Vec(2) << 1, 0).finished(), (Vec(2) << -1, 0).finished()};
        const Mat inv = regularized_cov_inverse(points, 0.5);
        CHECK(inv(0, 0) == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
        CHECK(inv(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(inv(0, 1)) < 1e-12);
    }
    SUBCASE("identical points give scaled identity") {
        const Vec x = (Vec(4) << 1, 2, 3, 4).finished();
        const std::vector<Vec> points{x, x, x};
        const double ridge = 0.05;
        CHECK(regularized_cov_inverse(points, ridge).isApprox(Mat::Identity(4, 4) / ridge, 1e-10));
    }
    SUBCASE("round-trips against the regularized covariance") {
        Rng rng(15);
        for (int trial = 0; trial < 50; ++trial) {
            const int dim = 2 + static_cast<int>(rng.index(5));
            const int count = 1 + static_cast<int>(rng.index(6));
            std::vector<Vec> points;
            for (int i = 0; i < count; ++i) {
                Vec x(dim);
                for (int d = 0; d < dim; ++d) x[d] = rng.normal();
                points.push_back(x);
            }
            const double ridge = rng.uniform(1e-3, 0.5);
            const Mat inv = regularized_cov_inverse(points, ridge);

            Vec mean = Vec::Zero(dim);
            for (const Vec& x : points) mean += x;
            mean /= static_cast<double>(count);
            Mat cov = Mat::Zero(dim, dim);
            for (const Vec& x : points) cov += (x - mean) * (x - mean).transpose();
            cov /= static_cast<double>(count);
            cov += ridge * Mat::Identity(dim, dim);

            CHECK(((inv * cov) - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((inv - inv.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("rejects empty input") {
        CHECK_THROWS_AS(regularized_cov_inverse({}, 1.0), DimensionMismatchError);
    }
}
