#include "protoprune/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace protoprune {

namespace {

void check_label(int label, int num_classes, const char* op) {
    if (label < 0 || label >= num_classes) {
        throw BadLabelError(std::string(op) + ": label " + std::to_string(label) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
}

// Logits <p_ck, z>/tau for every prototype, flat C*K.
Vec proto_logits(const EmbeddingPoint& z, const PrototypeBank& bank, double tau) {
    Vec logits(bank.size());
    for (int i = 0; i < bank.size(); ++i) {
        logits[i] = bank.protos[i].vec.dot(z.vec) / tau;
    }
    return logits;
}

}  // namespace

PrototypeBank::PrototypeBank(int num_classes_, int protos_per_class_, int dim) {
    if (num_classes_ < 1 || protos_per_class_ < 1) {
        throw ConfigError("PrototypeBank: num_classes and protos_per_class must be >= 1");
    }
    num_classes = num_classes_;
    protos_per_class = protos_per_class_;
    protos.assign(static_cast<std::size_t>(size()), EmbeddingPoint{Vec::Zero(dim)});
    grads.assign(static_cast<std::size_t>(size()), Vec::Zero(dim));
}

void PrototypeBank::zero_grads() {
    for (Vec& g : grads) g.setZero();
}

PrototypeBank PrototypeBank::random_init(int num_classes, int protos_per_class, int dim, Rng& rng,
                                         double max_pairwise_dot) {
    PrototypeBank bank(num_classes, protos_per_class, dim);
    constexpr int kMaxAttempts = 10000;
    for (int i = 0; i < bank.size(); ++i) {
        int attempts = 0;
        while (true) {
            Vec raw(dim);
            for (int d = 0; d < dim; ++d) raw[d] = rng.normal();
            EmbeddingPoint candidate = project_to_sphere(raw);
            bool ok = true;
            for (int j = 0; j < i; ++j) {
                if (candidate.vec.dot(bank.protos[j].vec) >= max_pairwise_dot) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                bank.protos[i] = std::move(candidate);
                break;
            }
            if (++attempts >= kMaxAttempts) {
                throw ConfigError("PrototypeBank::random_init: cannot place " +
                                  std::to_string(bank.size()) + " prototypes with pairwise dot < " +
                                  std::to_string(max_pairwise_dot) + " in dim " +
                                  std::to_string(dim));
            }
        }
    }
    return bank;
}

namespace {

// Farthest-point seeding followed by spherical k-means. Empty clusters
// keep their previous center.
std::vector<EmbeddingPoint> spherical_kmeans(const std::vector<EmbeddingPoint>& points,
                                             int num_centers, Rng& rng) {
    std::vector<std::size_t> chosen;
    chosen.push_back(rng.index(points.size()));
    while (static_cast<int>(chosen.size()) < num_centers) {
        std::size_t best = chosen.front();
        double best_score = 2.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double worst_dot = -2.0;
            for (std::size_t c : chosen) {
                worst_dot = std::max(worst_dot, points[i].vec.dot(points[c].vec));
            }
            if (worst_dot < best_score) {
                best_score = worst_dot;
                best = i;
            }
        }
        chosen.push_back(best);
    }

    const auto dim = points.front().vec.size();
    std::vector<EmbeddingPoint> centers;
    centers.reserve(static_cast<std::size_t>(num_centers));
    for (int c = 0; c < num_centers; ++c) {
        centers.push_back(points[chosen[static_cast<std::size_t>(c)]]);
    }
    for (int round = 0; round < 20; ++round) {
        std::vector<Vec> sums(centers.size(), Vec::Zero(dim));
        std::vector<int> counts(centers.size(), 0);
        for (const EmbeddingPoint& z : points) {
            std::size_t best = 0;
            double best_dot = centers[0].vec.dot(z.vec);
            for (std::size_t c = 1; c < centers.size(); ++c) {
                const double d = centers[c].vec.dot(z.vec);
                if (d > best_dot) {
                    best_dot = d;
                    best = c;
                }
            }
            sums[best] += z.vec;
            ++counts[best];
        }
        bool moved = false;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0 || sums[c].norm() < 1e-12) continue;
            const EmbeddingPoint updated = project_to_sphere(sums[c]);
            if ((updated.vec - centers[c].vec).norm() > 1e-10) moved = true;
            centers[c] = updated;
        }
        if (!moved) break;
    }
    return centers;
}

}  // namespace

PrototypeBank PrototypeBank::init_from_embeddings(int num_classes, int protos_per_class,
                                                  const std::vector<EmbeddingPoint>& points,
                                                  Rng& rng) {
    if (points.empty()) {
        throw ConfigError("PrototypeBank::init_from_embeddings: no embeddings");
    }
    const int dim = points.front().dim();
    PrototypeBank bank(num_classes, protos_per_class, dim);

    // Two-level clustering keeps each class's K prototypes on one actual
    // data cluster; a flat C*K clustering can interleave sub-clusters of
    // one group across different class buckets.
    const std::vector<EmbeddingPoint> class_centers = spherical_kmeans(points, num_classes, rng);
    for (int c = 0; c < num_classes; ++c) {
        std::vector<EmbeddingPoint> members;
        for (const EmbeddingPoint& z : points) {
            std::size_t best = 0;
            double best_dot = class_centers[0].vec.dot(z.vec);
            for (std::size_t j = 1; j < class_centers.size(); ++j) {
                const double d = class_centers[j].vec.dot(z.vec);
                if (d > best_dot) {
                    best_dot = d;
                    best = j;
                }
            }
            if (static_cast<int>(best) == c) members.push_back(z);
        }

        if (static_cast<int>(members.size()) >= protos_per_class) {
            const std::vector<EmbeddingPoint> subs =
                spherical_kmeans(members, protos_per_class, rng);
            for (int k = 0; k < protos_per_class; ++k) {
                bank.proto(c, k) = subs[static_cast<std::size_t>(k)];
            }
        } else {
            // Too few members to split: jitter the class center.
            for (int k = 0; k < protos_per_class; ++k) {
                Vec v = class_centers[static_cast<std::size_t>(c)].vec;
                for (int d = 0; d < dim; ++d) v[d] += 0.05 * rng.normal();
                bank.proto(c, k) = project_to_sphere(v);
            }
        }
    }
    return bank;
}

Vec class_assignment_probs(const EmbeddingPoint& z, const PrototypeBank& bank,
                           const HypersphereConfig& cfg) {
    const int C = bank.num_classes;
    const int K = bank.protos_per_class;
    const Vec logits = proto_logits(z, bank, cfg.tau);
    const double shift = logits.maxCoeff();

    Vec probs = Vec::Zero(C);
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) {
            s += std::exp(logits[bank.index(c, k)] - shift);
        }
        probs[c] = s;
        total += s;
    }
    probs /= total;
    return probs;
}

int assign_class(const EmbeddingPoint& z, const PrototypeBank& bank,
                 const HypersphereConfig& cfg) {
    const Vec probs = class_assignment_probs(z, bank, cfg);
    int best = 0;
    for (int c = 1; c < bank.num_classes; ++c) {
        if (probs[c] > probs[best]) best = c;
    }
    return best;
}

double compactness_loss(const std::vector<LabeledEmbedding>& batch, const PrototypeBank& bank,
                        const HypersphereConfig& cfg) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [z, label] : batch) {
        check_label(label, bank.num_classes, "compactness_loss");
        const Vec probs = class_assignment_probs(z, bank, cfg);
        total -= std::log(probs[label]);
    }
    return total / static_cast<double>(batch.size());
}

double separation_loss(const PrototypeBank& bank, const HypersphereConfig& cfg) {
    const int C = bank.num_classes;
    const int K = bank.protos_per_class;
    if (C < 2) {
        throw SingleClassError("separation_loss: undefined for a single class");
    }
    const double log_count = std::log(static_cast<double>((C - 1) * K));
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        for (int m = 0; m < K; ++m) {
            const Vec& anchor = bank.proto(c, m).vec;
            // log-mean-exp of cross-class affinities, stabilized by the max.
            double shift = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < C; ++j) {
                if (j == c) continue;
                for (int k = 0; k < K; ++k) {
                    shift = std::max(shift, bank.proto(j, k).vec.dot(anchor) / cfg.tau);
                }
            }
            double sum = 0.0;
            for (int j = 0; j < C; ++j) {
                if (j == c) continue;
                for (int k = 0; k < K; ++k) {
                    sum += std::exp(bank.proto(j, k).vec.dot(anchor) / cfg.tau - shift);
                }
            }
            total += shift + std::log(sum) - log_count;
        }
    }
    return total / static_cast<double>(C * K);
}

ProtoGradients prototype_gradients(const std::vector<LabeledEmbedding>& batch,
                                   const PrototypeBank& bank, const HypersphereConfig& cfg,
                                   const LossWeights& weights) {
    const int C = bank.num_classes;
    const int K = bank.protos_per_class;
    const int D = bank.dim();

    ProtoGradients out;
    out.proto.assign(static_cast<std::size_t>(bank.size()), Vec::Zero(D));
    out.embedding.assign(batch.size(), Vec::Zero(D));
    if (weights.lambda1 == 0.0 && weights.lambda2 == 0.0) return out;

    // Compactness: softmax over all prototypes; d loss / d logit is
    // q_ck - 1{c=y} q_ck / P_y, averaged over the batch.
    if (weights.lambda1 != 0.0 && !batch.empty()) {
        const double batch_scale = weights.lambda1 / static_cast<double>(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& [z, label] = batch[i];
            check_label(label, C, "prototype_gradients");
            const Vec logits = proto_logits(z, bank, cfg.tau);
            const double shift = logits.maxCoeff();
            Vec q(bank.size());
            double total = 0.0;
            for (int p = 0; p < bank.size(); ++p) {
                q[p] = std::exp(logits[p] - shift);
                total += q[p];
            }
            q /= total;
            double class_prob = 0.0;
            for (int k = 0; k < K; ++k) class_prob += q[bank.index(label, k)];

            for (int c = 0; c < C; ++c) {
                for (int k = 0; k < K; ++k) {
                    const int p = bank.index(c, k);
                    double dlogit = q[p];
                    if (c == label) dlogit -= q[p] / class_prob;
                    const double coeff = batch_scale * dlogit / cfg.tau;
                    out.proto[p].noalias() += coeff * z.vec;
                    out.embedding[i].noalias() += coeff * bank.protos[p].vec;
                }
            }
        }
    }

    // Separation: each anchor prototype sees a softmax over other-class
    // prototypes; both sides of every pair receive a gradient.
    if (weights.lambda2 != 0.0) {
        if (C < 2) {
            throw SingleClassError("prototype_gradients: separation undefined for one class");
        }
        const double sep_scale = weights.lambda2 / static_cast<double>(C * K);
        for (int c = 0; c < C; ++c) {
            for (int m = 0; m < K; ++m) {
                const int anchor_idx = bank.index(c, m);
                const Vec& anchor = bank.protos[anchor_idx].vec;
                double shift = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < C; ++j) {
                    if (j == c) continue;
                    for (int k = 0; k < K; ++k) {
                        shift = std::max(shift, bank.proto(j, k).vec.dot(anchor) / cfg.tau);
                    }
                }
                double total = 0.0;
                for (int j = 0; j < C; ++j) {
                    if (j == c) continue;
                    for (int k = 0; k < K; ++k) {
                        total += std::exp(bank.proto(j, k).vec.dot(anchor) / cfg.tau - shift);
                    }
                }
                for (int j = 0; j < C; ++j) {
                    if (j == c) continue;
                    for (int k = 0; k < K; ++k) {
                        const int other_idx = bank.index(j, k);
                        const Vec& other = bank.protos[other_idx].vec;
                        const double w = std::exp(other.dot(anchor) / cfg.tau - shift) / total;
                        const double coeff = sep_scale * w / cfg.tau;
                        out.proto[anchor_idx].noalias() += coeff * other;
                        out.proto[other_idx].noalias() += coeff * anchor;
                    }
                }
            }
        }
    }
    return out;
}

void apply_prototype_update(PrototypeBank& bank, const std::vector<Vec>& grads, double lr) {
    if (lr <= 0.0) throw ConfigError("apply_prototype_update: lr must be positive");
    if (static_cast<int>(grads.size()) != bank.size()) {
        throw DimensionMismatchError("apply_prototype_update: " + std::to_string(grads.size()) +
                                     " gradients for " + std::to_string(bank.size()) +
                                     " prototypes");
    }
    for (int i = 0; i < bank.size(); ++i) {
        bank.protos[i] = project_to_sphere(bank.protos[i].vec - lr * grads[i]);
    }
}

double proto_nce_loss(const std::vector<EmbeddingPoint>& batch, const PrototypeBank& bank,
                      const ClusterConcentration& conc, const HypersphereConfig& cfg,
                      TrainMode mode) {
    if (mode != TrainMode::Unsupervised) {
        throw ModeError("proto_nce_loss: only defined in unsupervised mode");
    }
    (void)cfg;  // temperatures come from conc, not the shared tau
    const int C = bank.num_classes;
    const int K = bank.protos_per_class;
    if (static_cast<int>(conc.phi.size()) != bank.size()) {
        throw DimensionMismatchError("proto_nce_loss: phi count mismatch");
    }

    double loss = 0.0;
    for (const EmbeddingPoint& z : batch) {
        Vec x(bank.size());
        for (int p = 0; p < bank.size(); ++p) {
            x[p] = z.vec.dot(bank.protos[p].vec) / conc.phi[p];
        }
        const double shift = x.maxCoeff();
        Vec shifted = (x.array() - shift).exp();
        const double denom = shifted.sum();
        double class_log_sum = 0.0;
        for (int c = 0; c < C; ++c) {
            double num = 0.0;
            for (int k = 0; k < K; ++k) num += shifted[bank.index(c, k)];
            class_log_sum += std::log(num);
        }
        // Shifts cancel between numerator and denominator logs.
        loss += -(class_log_sum / static_cast<double>(C)) + std::log(denom);
    }
    return loss;
}

ProtoGradients proto_nce_gradients(const std::vector<EmbeddingPoint>& batch,
                                   const PrototypeBank& bank, const ClusterConcentration& conc,
                                   const HypersphereConfig& cfg, TrainMode mode) {
    if (mode != TrainMode::Unsupervised) {
        throw ModeError("proto_nce_gradients: only defined in unsupervised mode");
    }
    (void)cfg;
    const int C = bank.num_classes;
    const int K = bank.protos_per_class;
    const int D = bank.dim();
    if (static_cast<int>(conc.phi.size()) != bank.size()) {
        throw DimensionMismatchError("proto_nce_gradients: phi count mismatch");
    }

    ProtoGradients out;
    out.proto.assign(static_cast<std::size_t>(bank.size()), Vec::Zero(D));
    out.embedding.assign(batch.size(), Vec::Zero(D));

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const EmbeddingPoint& z = batch[i];
        Vec x(bank.size());
        for (int p = 0; p < bank.size(); ++p) {
            x[p] = z.vec.dot(bank.protos[p].vec) / conc.phi[p];
        }
        const double shift = x.maxCoeff();
        Vec shifted = (x.array() - shift).exp();
        const double denom = shifted.sum();
        Vec class_sums = Vec::Zero(C);
        for (int c = 0; c < C; ++c) {
            for (int k = 0; k < K; ++k) class_sums[c] += shifted[bank.index(c, k)];
        }
        for (int c = 0; c < C; ++c) {
            for (int k = 0; k < K; ++k) {
                const int p = bank.index(c, k);
                const double dx =
                    shifted[p] / denom - shifted[p] / (static_cast<double>(C) * class_sums[c]);
                const double coeff = dx / conc.phi[p];
                out.embedding[i].noalias() += coeff * bank.protos[p].vec;
                out.proto[p].noalias() += coeff * z.vec;
            }
        }
    }
    return out;
}

ClusterConcentration estimate_concentration(const PrototypeBank& bank,
                                            const std::vector<std::vector<Vec>>& clusters,
                                            double alpha) {
    if (alpha <= 0.0) throw ConfigError("estimate_concentration: alpha must be positive");
    if (static_cast<int>(clusters.size()) != bank.size()) {
        throw DimensionMismatchError("estimate_concentration: cluster count mismatch");
    }
    constexpr double kPhiFloor = 1e-3;

    ClusterConcentration conc;
    conc.phi.assign(clusters.size(), 0.0);
    std::vector<double> non_empty;
    for (std::size_t p = 0; p < clusters.size(); ++p) {
        const auto& members = clusters[p];
        if (members.empty()) continue;
        double dist_sum = 0.0;
        for (const Vec& z : members) {
            dist_sum += (z - bank.protos[p].vec).norm();
        }
        const double count = static_cast<double>(members.size());
        const double phi = std::max(kPhiFloor, dist_sum / (count * std::log(count + alpha)));
        conc.phi[p] = phi;
        non_empty.push_back(phi);
    }

    double fill = 1.0;
    if (!non_empty.empty()) {
        std::sort(non_empty.begin(), non_empty.end());
        const std::size_t n = non_empty.size();
        fill = (n % 2 == 1) ? non_empty[n / 2]
                            : 0.5 * (non_empty[n / 2 - 1] + non_empty[n / 2]);
    }
    for (std::size_t p = 0; p < clusters.size(); ++p) {
        if (clusters[p].empty()) conc.phi[p] = fill;
    }
    return conc;
}

}  // namespace protoprune
