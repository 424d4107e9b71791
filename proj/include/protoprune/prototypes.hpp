#pragma once

#include <utility>
#include <vector>

#include "protoprune/geometry.hpp"
#include "protoprune/rng.hpp"

namespace protoprune {

enum class TrainMode { Supervised, Unsupervised };

// Trainable bank of C*K unit-norm prototypes plus gradient accumulators.
// Prototypes are stored flat, row-major by class: index(c, k) = c*K + k.
struct PrototypeBank {
    int num_classes = 0;
    int protos_per_class = 0;
    std::vector<EmbeddingPoint> protos;
    std::vector<Vec> grads;

    PrototypeBank() = default;
    PrototypeBank(int num_classes_, int protos_per_class_, int dim);

    int dim() const { return protos.empty() ? 0 : protos.front().dim(); }
    int size() const { return num_classes * protos_per_class; }
    int index(int c, int k) const { return c * protos_per_class + k; }

    EmbeddingPoint& proto(int c, int k) { return protos[index(c, k)]; }
    const EmbeddingPoint& proto(int c, int k) const { return protos[index(c, k)]; }

    void zero_grads();

    // Gaussian directions projected to the sphere, resampled until every
    // pairwise dot product is below max_pairwise_dot (near-coincident
    // prototypes stall the separation loss).
    static PrototypeBank random_init(int num_classes, int protos_per_class, int dim, Rng& rng,
                                     double max_pairwise_dot = 0.9);

    // Farthest-point selection of actual embeddings as prototypes. Random
    // sphere directions sit far from the data cap early in training, which
    // lets one prototype capture every sample and locks self-labeled
    // clustering into a single class; seeding from the data avoids that.
    static PrototypeBank init_from_embeddings(int num_classes, int protos_per_class,
                                              const std::vector<EmbeddingPoint>& points,
                                              Rng& rng);
};

// Coefficients of the combined objective; lambda3 weighs the contrastive
// term and is only active in unsupervised mode.
struct LossWeights {
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 0.0;
};

// Per-prototype concentration estimates for the contrastive loss.
struct ClusterConcentration {
    std::vector<double> phi;  // flat C*K, all > 0
};

// Gradients of the prototype losses: one vector per prototype (flat C*K)
// and one per batch embedding.
struct ProtoGradients {
    std::vector<Vec> proto;
    std::vector<Vec> embedding;
};

using LabeledEmbedding = std::pair<EmbeddingPoint, int>;

// Softmax class membership of z under the prototype mixture: entry c is
// sum_k exp(<p_k^c, z>/tau) normalized over all classes. Entries sum to 1.
Vec class_assignment_probs(const EmbeddingPoint& z, const PrototypeBank& bank,
                           const HypersphereConfig& cfg);

// Argmax of class_assignment_probs; ties break toward the lowest index.
int assign_class(const EmbeddingPoint& z, const PrototypeBank& bank, const HypersphereConfig& cfg);

// Mean negative log probability of each sample's own class. Empty batch
// yields 0.
double compactness_loss(const std::vector<LabeledEmbedding>& batch, const PrototypeBank& bank,
                        const HypersphereConfig& cfg);

// Mean over prototypes of the log-mean affinity to all other-class
// prototypes; minimizing it pushes classes apart. Requires C >= 2.
double separation_loss(const PrototypeBank& bank, const HypersphereConfig& cfg);

// Analytic gradients of lambda1 * compactness + lambda2 * separation with
// respect to every prototype and every batch embedding.
ProtoGradients prototype_gradients(const std::vector<LabeledEmbedding>& batch,
                                   const PrototypeBank& bank, const HypersphereConfig& cfg,
                                   const LossWeights& weights);

// One gradient step on every prototype followed by re-projection onto the
// sphere. Throws ZeroVectorError if an update annihilates a prototype.
void apply_prototype_update(PrototypeBank& bank, const std::vector<Vec>& grads, double lr);

// Prototypical contrastive loss over all prototypes with per-prototype
// temperatures phi. Unsupervised mode only.
double proto_nce_loss(const std::vector<EmbeddingPoint>& batch, const PrototypeBank& bank,
                      const ClusterConcentration& conc, const HypersphereConfig& cfg,
                      TrainMode mode);

// Analytic gradients of proto_nce_loss w.r.t. prototypes and embeddings.
ProtoGradients proto_nce_gradients(const std::vector<EmbeddingPoint>& batch,
                                   const PrototypeBank& bank, const ClusterConcentration& conc,
                                   const HypersphereConfig& cfg, TrainMode mode);

// phi for a prototype with Z assigned samples is (sum of Euclidean
// distances) / (Z * log(Z + alpha)), floored at 1e-3. Empty clusters get
// the median of the non-empty phis (1.0 if every cluster is empty).
ClusterConcentration estimate_concentration(const PrototypeBank& bank,
                                            const std::vector<std::vector<Vec>>& clusters,
                                            double alpha);

}  // namespace protoprune
