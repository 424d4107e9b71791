#include "protoprune/encoder.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace protoprune {

namespace {

Mat glorot(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat w(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            w(r, c) = rng.uniform(-bound, bound);
        }
    }
    return w;
}

Vec softmax(const Vec& logits) {
    const Vec shifted = (logits.array() - logits.maxCoeff()).exp();
    return shifted / shifted.sum();
}

}  // namespace

EncoderParams init_encoder(int in_dim, int hidden_dim, int num_layers, int embed_dim,
                           int num_classes, std::uint64_t seed) {
    if (in_dim < 1 || hidden_dim < 1 || num_layers < 1 || embed_dim < 2 || num_classes < 1) {
        throw ConfigError("init_encoder: bad dimensions");
    }
    Rng rng(derive_seed(seed, "encoder-init"));
    EncoderParams params;
    params.layers.reserve(static_cast<std::size_t>(num_layers));
    int in = in_dim;
    for (int l = 0; l < num_layers; ++l) {
        params.layers.push_back(glorot(in, hidden_dim, rng));
        in = hidden_dim;
    }
    params.proj = glorot(hidden_dim, embed_dim, rng);
    params.head = glorot(embed_dim, num_classes, rng);
    return params;
}

GraphForward forward(const GraphSample& graph, const EncoderParams& params) {
    const int n = graph.num_nodes();
    if (n == 0) throw EmptyGraphError("forward: graph has zero nodes");

    GraphForward fw;
    // Symmetric normalization with self-loops; degrees are >= 1 by the I.
    Mat a_hat = graph.adjacency;
    a_hat.diagonal().array() += 1.0;
    Vec inv_sqrt_deg = a_hat.rowwise().sum().array().rsqrt();
    fw.norm_adj = inv_sqrt_deg.asDiagonal() * a_hat * inv_sqrt_deg.asDiagonal();

    fw.states.push_back(graph.features);
    for (const Mat& w : params.layers) {
        fw.aggregated.push_back(fw.norm_adj * fw.states.back());
        fw.pre_act.push_back(fw.aggregated.back() * w);
        fw.states.push_back(fw.pre_act.back().cwiseMax(0.0));
    }

    fw.h = fw.states.back().colwise().mean().transpose();
    fw.z_raw = params.proj.transpose() * fw.h;
    fw.z_raw_norm = fw.z_raw.norm();
    if (fw.z_raw_norm < 1e-12) {
        // Degenerate projector output (e.g. all-zero weights): pin z to a
        // fixed axis and stop gradients through the projection.
        fw.degenerate = true;
        Vec axis = Vec::Zero(params.embed_dim());
        axis[0] = 1.0;
        fw.z = EmbeddingPoint{axis};
    } else {
        fw.z = EmbeddingPoint{fw.z_raw / fw.z_raw_norm};
    }
    fw.logits = params.head.transpose() * fw.z.vec;
    return fw;
}

double task_loss(const Vec& logits, int label) {
    if (label < 0 || label >= static_cast<int>(logits.size())) {
        throw BadLabelError("task_loss: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(logits.size()) + ")");
    }
    const double shift = logits.maxCoeff();
    const double lse = shift + std::log((logits.array() - shift).exp().sum());
    return lse - logits[label];
}

LossReport compute_losses(const std::vector<GraphForward>& forwards,
                          const std::vector<int>& labels, const PrototypeBank& bank,
                          const HypersphereConfig& hcfg, const LossWeights& weights,
                          TrainMode mode, const ClusterConcentration* conc) {
    if (forwards.size() != labels.size()) {
        throw DimensionMismatchError("compute_losses: batch/label size mismatch");
    }
    LossReport report;

    std::vector<LabeledEmbedding> batch;
    batch.reserve(forwards.size());
    for (std::size_t i = 0; i < forwards.size(); ++i) {
        batch.emplace_back(forwards[i].z, labels[i]);
    }

    if (mode == TrainMode::Supervised) {
        for (std::size_t i = 0; i < forwards.size(); ++i) {
            report.task += task_loss(forwards[i].logits, labels[i]);
        }
        if (!forwards.empty()) report.task /= static_cast<double>(forwards.size());
    }

    // Only terms that participate in the objective are evaluated; a zero
    // weight reports the term as zero.
    if (weights.lambda1 != 0.0) {
        report.compactness = compactness_loss(batch, bank, hcfg);
    }
    if (weights.lambda2 != 0.0) {
        report.separation = separation_loss(bank, hcfg);
    }
    if (mode == TrainMode::Unsupervised && weights.lambda3 != 0.0) {
        if (conc == nullptr) {
            throw ConfigError("compute_losses: contrastive loss needs concentration estimates");
        }
        std::vector<EmbeddingPoint> zs;
        zs.reserve(forwards.size());
        for (const GraphForward& fw : forwards) zs.push_back(fw.z);
        report.contrastive = proto_nce_loss(zs, bank, *conc, hcfg, mode);
    }
    report.total = report.task + weights.lambda1 * report.compactness +
                   weights.lambda2 * report.separation + weights.lambda3 * report.contrastive;
    return report;
}

BackwardResult backward(const std::vector<GraphForward>& forwards, const std::vector<int>& labels,
                        const EncoderParams& params, const PrototypeBank& bank,
                        const HypersphereConfig& hcfg, const LossWeights& weights, TrainMode mode,
                        const ClusterConcentration* conc) {
    if (forwards.empty()) throw ConfigError("backward: empty batch");
    if (forwards.size() != labels.size()) {
        throw DimensionMismatchError("backward: batch/label size mismatch");
    }
    const std::size_t n_batch = forwards.size();
    const std::size_t n_layers = params.layers.size();

    BackwardResult result;
    result.report = compute_losses(forwards, labels, bank, hcfg, weights, mode, conc);

    // Prototype-side gradients; per-sample embedding gradients come along.
    std::vector<LabeledEmbedding> batch;
    batch.reserve(n_batch);
    for (std::size_t i = 0; i < n_batch; ++i) batch.emplace_back(forwards[i].z, labels[i]);
    ProtoGradients proto_grads = prototype_gradients(batch, bank, hcfg, weights);

    if (mode == TrainMode::Unsupervised && weights.lambda3 != 0.0) {
        std::vector<EmbeddingPoint> zs;
        zs.reserve(n_batch);
        for (const GraphForward& fw : forwards) zs.push_back(fw.z);
        const ProtoGradients nce = proto_nce_gradients(zs, bank, *conc, hcfg, mode);
        for (int p = 0; p < bank.size(); ++p) {
            proto_grads.proto[static_cast<std::size_t>(p)].noalias() +=
                weights.lambda3 * nce.proto[static_cast<std::size_t>(p)];
        }
        for (std::size_t i = 0; i < n_batch; ++i) {
            proto_grads.embedding[i].noalias() += weights.lambda3 * nce.embedding[i];
        }
    }
    result.proto = std::move(proto_grads.proto);

    result.encoder.layers.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        result.encoder.layers.push_back(
            Mat::Zero(params.layers[l].rows(), params.layers[l].cols()));
    }
    result.encoder.proj = Mat::Zero(params.proj.rows(), params.proj.cols());
    result.encoder.head = Mat::Zero(params.head.rows(), params.head.cols());

    for (std::size_t i = 0; i < n_batch; ++i) {
        const GraphForward& fw = forwards[i];
        Vec dz = proto_grads.embedding[i];

        if (mode == TrainMode::Supervised) {
            Vec dlogits = softmax(fw.logits);
            dlogits[labels[i]] -= 1.0;
            dlogits /= static_cast<double>(n_batch);
            result.encoder.head.noalias() += fw.z.vec * dlogits.transpose();
            dz.noalias() += params.head * dlogits;
        }

        if (fw.degenerate) continue;  // z is pinned; nothing flows upstream

        // Through z = z_raw / ||z_raw||: tangential Jacobian (I - zz^T)/r.
        const Vec dz_raw = (dz - fw.z.vec * fw.z.vec.dot(dz)) / fw.z_raw_norm;
        result.encoder.proj.noalias() += fw.h * dz_raw.transpose();
        Vec dh = params.proj * dz_raw;

        // Mean readout spreads dh evenly over the nodes.
        const int n_nodes = static_cast<int>(fw.states.back().rows());
        Mat dstate =
            Vec::Constant(n_nodes, 1.0 / static_cast<double>(n_nodes)) * dh.transpose();

        for (std::size_t l = n_layers; l-- > 0;) {
            const Mat dpre =
                (fw.pre_act[l].array() > 0.0).cast<double>().array() * dstate.array();
            result.encoder.layers[l].noalias() += fw.aggregated[l].transpose() * dpre;
            if (l > 0) {
                dstate = fw.norm_adj * (dpre * params.layers[l].transpose());
            }
        }
    }
    return result;
}

void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr) {
    if (lr <= 0.0) throw ConfigError("sgd_step: lr must be positive");
    if (grads.layers.size() != params.layers.size()) {
        throw DimensionMismatchError("sgd_step: layer count mismatch");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.layers[l].noalias() -= lr * grads.layers[l];
    }
    params.proj.noalias() -= lr * grads.proj;
    params.head.noalias() -= lr * grads.head;
}

}  // namespace protoprune
