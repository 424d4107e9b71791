#include <CLI11.hpp>

#include "protoprune/trainer.hpp"

namespace protoprune {

namespace {

void parse_ratio(const std::string& text, int* a, int* b) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("--imbalance: expected a:b, got '" + text + "'");
    }
    try {
        *a = std::stoi(text.substr(0, colon));
        *b = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("--imbalance: bad ratio '" + text + "'");
    }
    if (*a < 1 || *b < 1) throw ConfigError("--imbalance: ratio parts must be >= 1");
}

}  // namespace

CliResult parse_cli(const std::vector<std::string>& args) {
    CliResult result;
    RunConfig& cfg = result.config;

    CLI::App app{"prototype-guided dynamic dataset pruning for graph-level training"};
    app.option_defaults()->always_capture_default();

    std::string method_str = "gder";
    std::string mode_str = "supervised";
    std::string imbalance_str;

    app.add_option("--method", method_str, "training method")
        ->check(CLI::IsMember({"gder", "full", "static-random", "soft-random"}));
    app.add_option("--dataset", cfg.dataset, "TU directory path or synthetic:<spec>");
    app.add_option("--remain-ratio", cfg.remain_ratio, "kept fraction of the training set");
    app.add_option("--epochs", cfg.epochs, "training epochs");
    app.add_option("--seed", cfg.seed, "run seed");
    app.add_option("--hidden-dim", cfg.hidden_dim, "encoder hidden width");
    app.add_option("--layers", cfg.num_layers, "message-passing layers");
    app.add_option("--embed-dim", cfg.embed_dim, "hypersphere dimension");
    app.add_option("--protos-per-class", cfg.protos_per_class, "prototypes per class (K)");
    app.add_option("--tau", cfg.tau, "assignment softmax temperature");
    app.add_option("--kappa", cfg.kappa, "angular kernel concentration");
    app.add_option("--lambda1", cfg.lambda1, "compactness loss weight");
    app.add_option("--lambda2", cfg.lambda2, "separation loss weight");
    app.add_option("--lambda3", cfg.lambda3, "contrastive loss weight (unsupervised)");
    app.add_option("--varsigma", cfg.varsigma, "scheduler initial retained share");
    app.add_option("--decay", cfg.decay, "scheduler decay exponent");
    app.add_option("--epsilon", cfg.epsilon, "sampling weight guard");
    app.add_option("--ridge", cfg.ridge, "covariance regularizer");
    app.add_flag("--standardize,!--no-standardize", cfg.standardize,
                 "z-score raw scores before the sigmoid");
    app.add_option("--lr", cfg.lr, "encoder learning rate");
    app.add_option("--proto-lr", cfg.proto_lr, "prototype learning rate (0 = follow --lr)");
    app.add_option("--imbalance", imbalance_str, "minority:majority ratio, e.g. 1:9");
    app.add_option("--minority-class", cfg.minority_class, "class the imbalance ratio shrinks");
    app.add_option("--noise-frac", cfg.noise_frac, "fraction of train graphs perturbed");
    app.add_option("--noise-sigma", cfg.noise_sigma, "feature noise scale");
    app.add_option("--mode", mode_str, "supervision mode")
        ->check(CLI::IsMember({"supervised", "unsupervised"}));
    app.add_option("--virtual-classes", cfg.virtual_classes,
                   "unsupervised prototype classes (0 = true class count)");
    app.add_option("--alpha", cfg.alpha, "concentration constant for the contrastive loss");
    app.add_option("--train-frac", cfg.train_frac, "train split fraction");
    app.add_option("--val-frac", cfg.val_frac, "validation split fraction");
    app.add_option("--test-frac", cfg.test_frac, "test split fraction");
    app.add_option("--eval-every", cfg.eval_every, "evaluation cadence in epochs");
    app.add_flag("--timing,!--no-timing", cfg.timing,
                 "record wall time (disable for byte-reproducible CSVs)");
    app.add_option("--out", cfg.out, "metrics CSV path");
    app.add_option("--baseline-csv", cfg.baseline_csv, "recorded full-run CSV for the speedup");
    app.set_config("--config", "", "flat key=value config file");
    app.allow_config_extras(false);

    std::vector<const char*> argv;
    argv.push_back("protoprune");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        result.help_requested = true;
        result.help_text = app.help();
        return result;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    if (method_str == "gder") cfg.method = Method::Gder;
    else if (method_str == "full") cfg.method = Method::Full;
    else if (method_str == "static-random") cfg.method = Method::StaticRandom;
    else cfg.method = Method::SoftRandom;
    cfg.mode = mode_str == "supervised" ? TrainMode::Supervised : TrainMode::Unsupervised;
    if (!imbalance_str.empty()) parse_ratio(imbalance_str, &cfg.imbalance_a, &cfg.imbalance_b);

    cfg.validate();
    return result;
}

}  // namespace protoprune
