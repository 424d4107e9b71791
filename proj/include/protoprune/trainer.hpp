#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protoprune/encoder.hpp"
#include "protoprune/sampler.hpp"
#include "protoprune/scoring.hpp"

namespace protoprune {

enum class Method { Gder, Full, StaticRandom, SoftRandom };

std::string method_name(Method m);

// Full description of one training run. Parsed from the CLI/config file;
// every field has a documented default.
struct RunConfig {
    Method method = Method::Gder;
    std::string dataset = "synthetic:";  // TU directory path or synthetic:<spec>
    double remain_ratio = 0.5;
    int epochs = 100;
    std::uint64_t seed = 42;

    int hidden_dim = 64;
    int num_layers = 3;
    int embed_dim = 16;

    int protos_per_class = 2;
    double tau = 1e-4;
    double kappa = 1.0;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 0.1;

    double varsigma = 0.7;
    double decay = 2.0;
    double epsilon = 1e-6;
    double ridge = 1e-3;
    bool standardize = true;

    double lr = 0.05;
    double proto_lr = 0.0;  // 0 = follow lr

    int imbalance_a = 0;  // 0:0 disables the imbalance protocol
    int imbalance_b = 0;
    int minority_class = 0;
    double noise_frac = 0.0;
    double noise_sigma = 1.0;

    TrainMode mode = TrainMode::Supervised;
    int virtual_classes = 0;  // unsupervised prototype classes; 0 = true C
    double alpha = 10.0;      // contrastive concentration constant

    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;

    int eval_every = 1;
    bool timing = true;  // false writes 0 wall time (reproducible CSVs)
    std::string out;     // CSV path; empty skips the file
    std::string baseline_csv;  // recorded full-run CSV for the speedup summary

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double wall_time_s = 0.0;  // training portion only (no evaluation)
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double f1 = 0.0;  // test-set macro F1
    LossReport losses;
    double minority_frac_selected = 0.0;
    double outlier_frac_selected = 0.0;
    int budget = 0;
};

struct RunResult {
    std::vector<EpochMetrics> epochs;
    double total_wall_s = 0.0;
    double final_train_acc = 0.0;
    double final_val_acc = 0.0;
    double final_test_acc = 0.0;
    double final_f1 = 0.0;
    int budget = 0;
    int train_size = 0;
};

// Execute the configured run end to end; writes the CSV when configured.
RunResult run(const RunConfig& config);

// Fixed-schema CSV round trip for metrics rows.
void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows);
std::vector<EpochMetrics> read_metrics_csv(const std::string& path);

// One-line JSON summary of a finished run.
std::string summary_json(const RunConfig& config, const RunResult& result);

// CLI/config-file parsing; flags override file keys override defaults.
// Throws ConfigError with a usage message on any invalid input.
struct CliResult {
    RunConfig config;
    bool help_requested = false;
    std::string help_text;
};
CliResult parse_cli(const std::vector<std::string>& args);

// Synthetic dataset spec strings ("synthetic:classes=2,n=100,gap=2,...").
SyntheticSpec parse_synthetic_spec(const std::string& spec);

// Materialize the configured dataset (synthetic or TU directory).
Dataset load_configured_dataset(const RunConfig& config);

}  // namespace protoprune
