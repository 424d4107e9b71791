#pragma once

#include <vector>

#include "protoprune/prototypes.hpp"

namespace protoprune {

// Raw per-sample scores for one epoch plus the combined sampling mass.
struct SampleScores {
    double outlier = 0.0;      // Mahalanobis risk, larger = riskier
    double familiarity = 0.0;  // own-class / other-class distance ratio, larger = less familiar
    double balance = 0.0;      // own-cluster population fraction in (0, 1]
    double weight = 0.0;       // unnormalized sampling mass, always > 0
};

struct ScoringConfig {
    double epsilon = 1e-6;  // guards the divisions in the combined weight
    double ridge = 1e-3;    // covariance regularizer
    bool standardize = true;  // z-score raw scores before the sigmoid

    void validate() const {
        if (epsilon <= 0.0) throw ConfigError("scoring epsilon must be positive");
        if (ridge <= 0.0) throw ConfigError("scoring ridge must be positive");
    }
};

// Maximum Mahalanobis distance of z to its own class's prototypes, under
// the ridge-regularized covariance of those prototypes.
double outlier_score(const EmbeddingPoint& z, int label, const PrototypeBank& bank,
                     const ScoringConfig& cfg);

// Own-class angular distance mass over other-class angular distance mass;
// small = familiar. Requires C >= 2.
double familiarity_score(const EmbeddingPoint& z, int label, const PrototypeBank& bank,
                         const HypersphereConfig& hcfg);

// Flat index of the nearest prototype (largest dot product, ties toward
// the lowest index).
int nearest_prototype_index(const EmbeddingPoint& z, const PrototypeBank& bank);

// Fraction of the pool sharing this sample's nearest-prototype cluster.
double balance_score(std::size_t index, const std::vector<int>& assignments);

// Optional z-scoring over the pool followed by an elementwise sigmoid.
// Zero-variance pools map to all 0.5.
std::vector<double> sigmoid_transform(const std::vector<double>& raw, bool standardize);

// Combine the three raw score vectors into per-sample sampling weights:
// w = sigmoid(familiarity) / ((sigmoid(outlier)+eps) * (sigmoid(balance)+eps)).
std::vector<SampleScores> sampling_weights(const std::vector<double>& outlier_raw,
                                           const std::vector<double>& familiarity_raw,
                                           const std::vector<double>& balance_raw,
                                           const ScoringConfig& cfg);

}  // namespace protoprune
