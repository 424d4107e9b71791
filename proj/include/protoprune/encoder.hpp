#pragma once

#include <cstdint>
#include <vector>

#include "protoprune/data.hpp"
#include "protoprune/prototypes.hpp"

namespace protoprune {

// Weights of the message-passing encoder, the sphere projector, and the
// classification head. No biases anywhere.
struct EncoderParams {
    std::vector<Mat> layers;  // layer l maps in_dim -> out_dim
    Mat proj;                 // E x D
    Mat head;                 // D x C
    double lr = 0.1;

    int embed_dim() const { return static_cast<int>(proj.cols()); }
    int num_classes() const { return static_cast<int>(head.cols()); }
};

// Glorot-uniform initialization, seeded.
EncoderParams init_encoder(int in_dim, int hidden_dim, int num_layers, int embed_dim,
                           int num_classes, std::uint64_t seed);

// Cached intermediates of one graph's forward pass, kept for backprop.
struct GraphForward {
    Mat norm_adj;                 // D^-1/2 (A+I) D^-1/2
    std::vector<Mat> aggregated;  // per layer: norm_adj * H_(l-1)
    std::vector<Mat> pre_act;     // per layer: aggregated * W_l
    std::vector<Mat> states;      // H_0 .. H_L (H_0 = X)
    Vec h;                        // mean-pooled readout
    Vec z_raw;                    // projector output before normalization
    double z_raw_norm = 0.0;
    bool degenerate = false;      // projector emitted a (near-)zero vector
    EmbeddingPoint z;
    Vec logits;
};

// L rounds of symmetric-normalized aggregation with ReLU, mean readout,
// sphere projection, and linear head. Throws EmptyGraphError on zero nodes.
GraphForward forward(const GraphSample& graph, const EncoderParams& params);

// Softmax cross-entropy.
double task_loss(const Vec& logits, int label);

struct LossReport {
    double task = 0.0;
    double compactness = 0.0;
    double separation = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
};

// Task, prototype, and (in unsupervised mode) contrastive losses for a
// batch of cached forwards, combined with the configured weights.
LossReport compute_losses(const std::vector<GraphForward>& forwards,
                          const std::vector<int>& labels, const PrototypeBank& bank,
                          const HypersphereConfig& hcfg, const LossWeights& weights,
                          TrainMode mode, const ClusterConcentration* conc);

struct EncoderGrads {
    std::vector<Mat> layers;
    Mat proj;
    Mat head;
};

struct BackwardResult {
    EncoderGrads encoder;
    std::vector<Vec> proto;  // flat C*K prototype gradients
    LossReport report;
};

// Exact analytic gradients of the combined loss w.r.t. every encoder
// parameter and every prototype, chained through the sphere projection.
BackwardResult backward(const std::vector<GraphForward>& forwards, const std::vector<int>& labels,
                        const EncoderParams& params, const PrototypeBank& bank,
                        const HypersphereConfig& hcfg, const LossWeights& weights, TrainMode mode,
                        const ClusterConcentration* conc);

// Plain gradient descent, elementwise.
void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr);

}  // namespace protoprune
