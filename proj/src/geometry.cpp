#include "protoprune/geometry.hpp"

#include <cmath>
#include <string>

namespace protoprune {

namespace {

void check_same_dim(const EmbeddingPoint& a, const EmbeddingPoint& b, const char* op) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatchError(std::string(op) + ": point dims " +
                                     std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
}

}  // namespace

EmbeddingPoint project_to_sphere(const Vec& raw) {
    const double norm = raw.norm();
    if (norm < 1e-12) {
        throw ZeroVectorError("project_to_sphere: vector norm below 1e-12");
    }
    return EmbeddingPoint{raw / norm};
}

double angular_affinity(const EmbeddingPoint& p, const EmbeddingPoint& z, double kappa) {
    check_same_dim(p, z, "angular_affinity");
    return std::exp(kappa * p.vec.dot(z.vec));
}

double angular_distance(const EmbeddingPoint& p, const EmbeddingPoint& z, double kappa) {
    check_same_dim(p, z, "angular_distance");
    return std::exp(-kappa * p.vec.dot(z.vec));
}

double mahalanobis_sq(const EmbeddingPoint& z, const EmbeddingPoint& p, const Mat& cov_inv) {
    check_same_dim(z, p, "mahalanobis_sq");
    if (cov_inv.rows() != z.dim() || cov_inv.cols() != z.dim()) {
        throw DimensionMismatchError("mahalanobis_sq: cov_inv is " +
                                     std::to_string(cov_inv.rows()) + "x" +
                                     std::to_string(cov_inv.cols()) + ", points have dim " +
                                     std::to_string(z.dim()));
    }
    const Vec diff = z.vec - p.vec;
    return diff.dot(cov_inv * diff);
}

Mat regularized_cov_inverse(const std::vector<Vec>& points, double ridge) {
    if (points.empty()) {
        throw DimensionMismatchError("regularized_cov_inverse: no points");
    }
    if (ridge <= 0.0) {
        throw ConfigError("regularized_cov_inverse: ridge must be positive");
    }
    const auto dim = points.front().size();
    Vec mean = Vec::Zero(dim);
    for (const Vec& x : points) {
        if (x.size() != dim) {
            throw DimensionMismatchError("regularized_cov_inverse: mixed point dims");
        }
        mean += x;
    }
    mean /= static_cast<double>(points.size());

    // Population covariance (divide by count) so a single point degrades to
    // the zero matrix instead of being undefined.
    Mat cov = Mat::Zero(dim, dim);
    for (const Vec& x : points) {
        const Vec d = x - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());
    cov.diagonal().array() += ridge;

    Mat inv = Eigen::LLT<Mat>(cov).solve(Mat::Identity(dim, dim));
    // Symmetrize to wash out solver round-off.
    return 0.5 * (inv + inv.transpose());
}

}  // namespace protoprune
