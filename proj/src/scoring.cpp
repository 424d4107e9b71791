#include "protoprune/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace protoprune {

double outlier_score(const EmbeddingPoint& z, int label, const PrototypeBank& bank,
                     const ScoringConfig& cfg) {
    if (label < 0 || label >= bank.num_classes) {
        throw BadLabelError("outlier_score: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(bank.num_classes) + ")");
    }
    std::vector<Vec> class_protos;
    class_protos.reserve(bank.protos_per_class);
    for (int k = 0; k < bank.protos_per_class; ++k) {
        class_protos.push_back(bank.proto(label, k).vec);
    }
    const Mat cov_inv = regularized_cov_inverse(class_protos, cfg.ridge);

    double worst = 0.0;
    for (int k = 0; k < bank.protos_per_class; ++k) {
        worst = std::max(worst, mahalanobis_sq(z, bank.proto(label, k), cov_inv));
    }
    return worst;
}

double familiarity_score(const EmbeddingPoint& z, int label, const PrototypeBank& bank,
                         const HypersphereConfig& hcfg) {
    if (bank.num_classes < 2) {
        throw SingleClassError("familiarity_score: needs at least two classes");
    }
    if (label < 0 || label >= bank.num_classes) {
        throw BadLabelError("familiarity_score: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(bank.num_classes) + ")");
    }
    double own = 0.0;
    double other = 0.0;
    for (int c = 0; c < bank.num_classes; ++c) {
        for (int k = 0; k < bank.protos_per_class; ++k) {
            const double d = angular_distance(bank.proto(c, k), z, hcfg.kappa);
            if (c == label) {
                own += d;
            } else {
                other += d;
            }
        }
    }
    return own / other;
}

int nearest_prototype_index(const EmbeddingPoint& z, const PrototypeBank& bank) {
    int best = 0;
    double best_dot = bank.protos[0].vec.dot(z.vec);
    for (int p = 1; p < bank.size(); ++p) {
        const double d = bank.protos[p].vec.dot(z.vec);
        if (d > best_dot) {
            best = p;
            best_dot = d;
        }
    }
    return best;
}

double balance_score(std::size_t index, const std::vector<int>& assignments) {
    if (assignments.empty() || index >= assignments.size()) {
        throw DimensionMismatchError("balance_score: index outside pool");
    }
    const int own_cluster = assignments[index];
    std::size_t count = 0;
    for (int a : assignments) {
        if (a == own_cluster) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(assignments.size());
}

std::vector<double> sigmoid_transform(const std::vector<double>& raw, bool standardize) {
    std::vector<double> out(raw.size());
    if (raw.empty()) return out;

    if (standardize) {
        double mean = 0.0;
        for (double x : raw) mean += x;
        mean /= static_cast<double>(raw.size());
        double var = 0.0;
        for (double x : raw) var += (x - mean) * (x - mean);
        var /= static_cast<double>(raw.size());
        if (var < 1e-12) {
            std::fill(out.begin(), out.end(), 0.5);
            return out;
        }
        const double inv_sd = 1.0 / std::sqrt(var);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] = 1.0 / (1.0 + std::exp(-(raw[i] - mean) * inv_sd));
        }
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] = 1.0 / (1.0 + std::exp(-raw[i]));
        }
    }
    return out;
}

std::vector<SampleScores> sampling_weights(const std::vector<double>& outlier_raw,
                                           const std::vector<double>& familiarity_raw,
                                           const std::vector<double>& balance_raw,
                                           const ScoringConfig& cfg) {
    cfg.validate();
    const std::size_t n = outlier_raw.size();
    if (familiarity_raw.size() != n || balance_raw.size() != n) {
        throw DimensionMismatchError("sampling_weights: score vectors differ in length");
    }
    const std::vector<double> sig_r = sigmoid_transform(outlier_raw, cfg.standardize);
    const std::vector<double> sig_e = sigmoid_transform(familiarity_raw, cfg.standardize);
    const std::vector<double> sig_b = sigmoid_transform(balance_raw, cfg.standardize);

    std::vector<SampleScores> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].outlier = outlier_raw[i];
        out[i].familiarity = familiarity_raw[i];
        out[i].balance = balance_raw[i];
        out[i].weight = sig_e[i] / ((sig_r[i] + cfg.epsilon) * (sig_b[i] + cfg.epsilon));
    }
    return out;
}

}  // namespace protoprune
