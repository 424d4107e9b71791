#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "protoprune/geometry.hpp"
#include "protoprune/rng.hpp"

namespace protoprune {

// One graph: dense symmetric 0/1 adjacency with zero diagonal, a
// node-by-feature matrix, and an optional class label. The outlier flag is
// ground truth for evaluation only and is never visible to selection.
struct GraphSample {
    int id = 0;
    Mat adjacency;  // |V| x |V|
    Mat features;   // |V| x F
    std::optional<int> label;
    bool is_outlier = false;

    int num_nodes() const { return static_cast<int>(adjacency.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
};

using Dataset = std::vector<GraphSample>;

int num_classes(const Dataset& data);

// Plain-text TU layout: <name>_A.txt (1-indexed "u, v" edge list),
// <name>_graph_indicator.txt, <name>_graph_labels.txt, and optionally
// <name>_node_labels.txt (one-hot encoded into features; otherwise every
// node gets the constant feature 1.0).
Dataset load_tu_dataset(const std::filesystem::path& directory);

// Inverse of load_tu_dataset for datasets it can represent (one-hot or
// constant features). load -> save -> load is an identity.
void save_tu_dataset(const Dataset& data, const std::filesystem::path& directory,
                     const std::string& name);

// Synthetic generator: per class, Erdos-Renyi backbones with a planted
// class motif and class-shifted Gaussian node features.
struct SyntheticSpec {
    std::vector<int> n_per_class = {50, 50};
    int nodes_min = 10;
    int nodes_max = 16;
    double edge_prob = 0.15;
    int feature_dim = 8;
    double feature_gap = 2.0;  // class-mean separation in units of sigma
    double sigma = 1.0;
    int motif_size = 5;
    double probe_threshold = 0.9;  // separability guarantee; 0 disables
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Held-out nearest-centroid probe on per-graph mean features; the
// separability oracle for generated datasets.
double linear_probe_accuracy(const Dataset& data, std::uint64_t seed);

// Resample the set until minority:majority class counts match ratio_a:ratio_b
// (minority subsampled first, other classes duplicated as needed); the total
// size is preserved within rounding.
Dataset apply_imbalance(const Dataset& train, int minority_class, int ratio_a, int ratio_b,
                        std::uint64_t seed);

// Add elementwise Gaussian noise to the node features of a seeded
// floor(fraction*N) subset and flag those samples as outliers.
Dataset inject_noise(const Dataset& train, double fraction, double sigma, std::uint64_t seed);

struct SplitSpec {
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetSplit {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Seeded shuffle then partition by the spec's fractions.
DatasetSplit split_dataset(const Dataset& data, const SplitSpec& spec);

}  // namespace protoprune
