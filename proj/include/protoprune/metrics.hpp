#pragma once

#include <vector>

#include "protoprune/errors.hpp"

namespace protoprune {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Unweighted mean over classes of per-class F1. Classes absent from both
// predictions and labels contribute 0.
double f1_macro(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes);

// Best label permutation (exhaustive over C!) aligning cluster ids with
// ground truth; returns the permuted predictions' accuracy and the map.
struct PermutationMatch {
    double accuracy = 0.0;
    std::vector<int> permutation;  // cluster id -> class label
};
PermutationMatch best_permutation_match(const std::vector<int>& cluster_ids,
                                        const std::vector<int>& labels, int num_classes);

}  // namespace protoprune
