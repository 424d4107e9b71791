#pragma once

#include <Eigen/Dense>
#include <vector>

#include "protoprune/errors.hpp"

namespace protoprune {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A point on the unit hypersphere. Produced by project_to_sphere; every
// consumer assumes unit norm (within 1e-9).
struct EmbeddingPoint {
    Vec vec;

    int dim() const { return static_cast<int>(vec.size()); }
};

// Shared hypersphere parameters: embedding dimension, concentration kappa
// for the angular kernels, and softmax temperature tau.
struct HypersphereConfig {
    int dim = 0;
    double kappa = 1.0;
    double tau = 1e-4;

    void validate() const {
        if (dim < 2) throw ConfigError("hypersphere dim must be >= 2");
        if (kappa <= 0.0) throw ConfigError("kappa must be positive");
        if (tau <= 0.0) throw ConfigError("tau must be positive");
    }
};

// raw / ||raw||. Throws ZeroVectorError when ||raw|| < 1e-12.
EmbeddingPoint project_to_sphere(const Vec& raw);

// exp(kappa * <p, z>). Symmetric in p and z; range [exp(-kappa), exp(kappa)].
double angular_affinity(const EmbeddingPoint& p, const EmbeddingPoint& z, double kappa);

// exp(-kappa * <p, z>): strictly decreasing in similarity, strictly positive.
double angular_distance(const EmbeddingPoint& p, const EmbeddingPoint& z, double kappa);

// (z - p)^T cov_inv (z - p). cov_inv must be symmetric positive definite.
double mahalanobis_sq(const EmbeddingPoint& z, const EmbeddingPoint& p, const Mat& cov_inv);

// (S + ridge * I)^-1 with S the population covariance (divide by count) of
// the given points. Ridge keeps the matrix invertible for any point count.
Mat regularized_cov_inverse(const std::vector<Vec>& points, double ridge);

}  // namespace protoprune
