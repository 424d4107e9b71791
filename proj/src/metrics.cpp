#include "protoprune/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace protoprune {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionMismatchError("accuracy: prediction/label size mismatch");
    }
    if (predictions.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double f1_macro(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes) {
    if (predictions.size() != labels.size()) {
        throw DimensionMismatchError("f1_macro: prediction/label size mismatch");
    }
    if (num_classes < 1) throw ConfigError("f1_macro: num_classes must be >= 1");

    double f1_sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool pred_c = predictions[i] == c;
            const bool is_c = labels[i] == c;
            if (pred_c && is_c) ++tp;
            if (pred_c && !is_c) ++fp;
            if (!pred_c && is_c) ++fn;
        }
        // Absent classes (no tp, fp, or fn) contribute F1 = 0.
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    }
    return f1_sum / static_cast<double>(num_classes);
}

PermutationMatch best_permutation_match(const std::vector<int>& cluster_ids,
                                        const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1 || num_classes > 8) {
        throw ConfigError("best_permutation_match: num_classes must be in [1, 8]");
    }
    std::vector<int> perm(static_cast<std::size_t>(num_classes));
    std::iota(perm.begin(), perm.end(), 0);

    PermutationMatch best;
    best.permutation = perm;
    do {
        std::vector<int> mapped(cluster_ids.size());
        for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
            mapped[i] = perm[static_cast<std::size_t>(cluster_ids[i])];
        }
        const double acc = accuracy(mapped, labels);
        if (acc > best.accuracy) {
            best.accuracy = acc;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace protoprune
