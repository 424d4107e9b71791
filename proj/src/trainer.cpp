#include "protoprune/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "protoprune/metrics.hpp"

namespace protoprune {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int label_of(const GraphSample& g) {
    if (!g.label) throw ConfigError("run: sample " + std::to_string(g.id) + " has no label");
    return *g.label;
}

// Evaluation predictions for one split. Supervised runs read the head;
// unsupervised runs report prototype cluster ids to be permuted later.
std::vector<int> predict(const Dataset& split, const EncoderParams& params,
                         const PrototypeBank& bank, const HypersphereConfig& hcfg,
                         TrainMode mode) {
    std::vector<int> preds;
    preds.reserve(split.size());
    for (const GraphSample& g : split) {
        const GraphForward fw = forward(g, params);
        if (mode == TrainMode::Supervised) {
            int best = 0;
            for (int c = 1; c < fw.logits.size(); ++c) {
                if (fw.logits[c] > fw.logits[best]) best = c;
            }
            preds.push_back(best);
        } else {
            preds.push_back(assign_class(fw.z, bank, hcfg));
        }
    }
    return preds;
}

std::vector<int> labels_of(const Dataset& split) {
    std::vector<int> labels;
    labels.reserve(split.size());
    for (const GraphSample& g : split) labels.push_back(label_of(g));
    return labels;
}

struct EvalSnapshot {
    double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0, f1 = 0.0;
};

EvalSnapshot evaluate(const Dataset& train, const Dataset& val, const Dataset& test,
                      const EncoderParams& params, const PrototypeBank& bank,
                      const HypersphereConfig& hcfg, TrainMode mode, int true_classes) {
    EvalSnapshot snap;
    const std::vector<int> train_pred = predict(train, params, bank, hcfg, mode);
    const std::vector<int> val_pred = predict(val, params, bank, hcfg, mode);
    const std::vector<int> test_pred = predict(test, params, bank, hcfg, mode);

    if (mode == TrainMode::Supervised) {
        snap.train_acc = accuracy(train_pred, labels_of(train));
        snap.val_acc = val.empty() ? 0.0 : accuracy(val_pred, labels_of(val));
        snap.test_acc = test.empty() ? 0.0 : accuracy(test_pred, labels_of(test));
        snap.f1 = test.empty() ? 0.0 : f1_macro(test_pred, labels_of(test), true_classes);
    } else {
        // Align cluster ids with labels on the training split, then apply
        // the same permutation everywhere.
        const PermutationMatch match =
            best_permutation_match(train_pred, labels_of(train), bank.num_classes);
        auto apply = [&match](const std::vector<int>& preds) {
            std::vector<int> mapped(preds.size());
            for (std::size_t i = 0; i < preds.size(); ++i) {
                mapped[i] = match.permutation[static_cast<std::size_t>(preds[i])];
            }
            return mapped;
        };
        snap.train_acc = match.accuracy;
        snap.val_acc = val.empty() ? 0.0 : accuracy(apply(val_pred), labels_of(val));
        snap.test_acc = test.empty() ? 0.0 : accuracy(apply(test_pred), labels_of(test));
        snap.f1 = test.empty() ? 0.0 : f1_macro(apply(test_pred), labels_of(test), true_classes);
    }
    return snap;
}

std::string format_double(double x, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, x);
    return buf;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Gder: return "gder";
        case Method::Full: return "full";
        case Method::StaticRandom: return "static-random";
        case Method::SoftRandom: return "soft-random";
    }
    return "?";
}

void RunConfig::validate() const {
    if (remain_ratio <= 0.0 || remain_ratio > 1.0) {
        throw ConfigError("remain-ratio must be in (0, 1]");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (hidden_dim < 1 || num_layers < 1) throw ConfigError("encoder dims must be >= 1");
    if (embed_dim < 2) throw ConfigError("embed-dim must be >= 2");
    if (protos_per_class < 1) throw ConfigError("protos-per-class must be >= 1");
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (kappa <= 0.0) throw ConfigError("kappa must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (varsigma <= 0.0 || varsigma > 1.0) throw ConfigError("varsigma must be in (0, 1]");
    if (decay < 0.0) throw ConfigError("decay must be >= 0");
    if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    if (ridge <= 0.0) throw ConfigError("ridge must be positive");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (proto_lr < 0.0) throw ConfigError("proto-lr must be >= 0");
    if ((imbalance_a == 0) != (imbalance_b == 0) || imbalance_a < 0 || imbalance_b < 0) {
        throw ConfigError("imbalance needs both ratio parts positive (or both absent)");
    }
    if (noise_frac < 0.0 || noise_frac >= 1.0) throw ConfigError("noise-frac must be in [0, 1)");
    if (noise_sigma < 0.0) throw ConfigError("noise-sigma must be >= 0");
    if (virtual_classes < 0) throw ConfigError("virtual-classes must be >= 0");
    if (alpha <= 0.0) throw ConfigError("alpha must be positive");
    if (eval_every < 1) throw ConfigError("eval-every must be >= 1");
    SplitSpec{train_frac, val_frac, test_frac, seed}.validate();
}

SyntheticSpec parse_synthetic_spec(const std::string& spec) {
    SyntheticSpec out;
    int classes = 2;
    int total = 100;
    std::string body = spec;
    if (body == "default") body.clear();
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("synthetic spec: expected key=value, got '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            if (key == "classes") classes = std::stoi(value);
            else if (key == "n") total = std::stoi(value);
            else if (key == "nodes-min") out.nodes_min = std::stoi(value);
            else if (key == "nodes-max") out.nodes_max = std::stoi(value);
            else if (key == "edge-prob") out.edge_prob = std::stod(value);
            else if (key == "dim") out.feature_dim = std::stoi(value);
            else if (key == "gap") out.feature_gap = std::stod(value);
            else if (key == "sigma") out.sigma = std::stod(value);
            else if (key == "motif") out.motif_size = std::stoi(value);
            else if (key == "probe") out.probe_threshold = std::stod(value);
            else throw ConfigError("synthetic spec: unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("synthetic spec: bad value for '" + key + "'");
        }
    }
    if (classes < 2) throw ConfigError("synthetic spec: classes must be >= 2");
    if (total < classes) throw ConfigError("synthetic spec: n must cover every class");
    out.n_per_class.assign(static_cast<std::size_t>(classes), total / classes);
    for (int c = 0; c < total % classes; ++c) ++out.n_per_class[static_cast<std::size_t>(c)];
    return out;
}

Dataset load_configured_dataset(const RunConfig& config) {
    const std::string prefix = "synthetic:";
    if (config.dataset.rfind(prefix, 0) == 0) {
        return generate_synthetic(parse_synthetic_spec(config.dataset.substr(prefix.size())),
                                  config.seed);
    }
    return load_tu_dataset(config.dataset);
}

RunResult run(const RunConfig& config) {
    config.validate();

    Dataset all = load_configured_dataset(config);
    DatasetSplit split =
        split_dataset(all, SplitSpec{config.train_frac, config.val_frac, config.test_frac,
                                     config.seed});
    if (config.imbalance_a > 0) {
        split.train = apply_imbalance(split.train, config.minority_class, config.imbalance_a,
                                      config.imbalance_b, config.seed);
    }
    if (config.noise_frac > 0.0) {
        split.train = inject_noise(split.train, config.noise_frac, config.noise_sigma,
                                   config.seed);
    }
    // Selection operates on train-pool positions.
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        split.train[i].id = static_cast<int>(i);
    }

    const int true_classes = num_classes(all);
    if (true_classes < 2) throw ConfigError("run: dataset needs at least two classes");
    const int model_classes = (config.mode == TrainMode::Unsupervised && config.virtual_classes > 0)
                                  ? config.virtual_classes
                                  : true_classes;
    const int feature_dim = split.train.front().feature_dim();

    const int train_size = static_cast<int>(split.train.size());
    const int budget =
        config.method == Method::Full
            ? train_size
            : static_cast<int>(std::lround(config.remain_ratio * static_cast<double>(train_size)));
    if (budget < 1 || budget > train_size) {
        throw ConfigError("run: budget " + std::to_string(budget) + " outside [1, " +
                          std::to_string(train_size) + "]");
    }

    const HypersphereConfig hcfg{config.embed_dim, config.kappa, config.tau};
    hcfg.validate();
    const ScoringConfig scfg{config.epsilon, config.ridge, config.standardize};
    scfg.validate();
    const SchedulerConfig sched{config.varsigma, config.decay, config.epochs};
    const LossWeights weights =
        config.method == Method::Gder
            ? LossWeights{config.lambda1, config.lambda2,
                          config.mode == TrainMode::Unsupervised ? config.lambda3 : 0.0}
            : LossWeights{0.0, 0.0, 0.0};
    const double proto_lr = config.proto_lr > 0.0 ? config.proto_lr : config.lr;

    EncoderParams params = init_encoder(feature_dim, config.hidden_dim, config.num_layers,
                                        config.embed_dim, true_classes, config.seed);
    Rng proto_rng(derive_seed(config.seed, "proto-init"));
    PrototypeBank bank =
        PrototypeBank::random_init(model_classes, config.protos_per_class, config.embed_dim,
                                   proto_rng);
    Rng select_rng(derive_seed(config.seed, "selection"));

    std::vector<SampleId> all_ids(static_cast<std::size_t>(train_size));
    for (int i = 0; i < train_size; ++i) all_ids[static_cast<std::size_t>(i)] = i;
    WeightMap uniform;
    for (SampleId id : all_ids) uniform[id] = 1.0;

    SelectionState state;
    std::vector<SampleId> fixed_subset;
    if (config.method == Method::Gder) {
        state = SelectionState::init(all_ids, budget, select_rng);
    } else if (config.method == Method::StaticRandom) {
        fixed_subset = weighted_sample_without_replacement(all_ids, uniform, budget, select_rng);
        std::sort(fixed_subset.begin(), fixed_subset.end());
    }

    // Minority class for the selection metrics: configured under the
    // imbalance protocol, otherwise the rarest class in the train pool.
    int minority = config.minority_class;
    if (config.imbalance_a == 0) {
        std::vector<int> counts(static_cast<std::size_t>(true_classes), 0);
        for (const GraphSample& g : split.train) ++counts[static_cast<std::size_t>(label_of(g))];
        minority = static_cast<int>(std::min_element(counts.begin(), counts.end()) -
                                    counts.begin());
    }

    RunResult result;
    result.budget = budget;
    result.train_size = train_size;
    EvalSnapshot snap;

    for (int t = 0; t < config.epochs; ++t) {
        const auto tic = Clock::now();

        std::vector<SampleId> selected;
        if (config.method == Method::Gder) {
            selected = state.retained;
        } else if (config.method == Method::Full) {
            selected = all_ids;
        } else if (config.method == Method::StaticRandom) {
            selected = fixed_subset;
        } else {
            selected = weighted_sample_without_replacement(all_ids, uniform, budget, select_rng);
            std::sort(selected.begin(), selected.end());
        }

        std::vector<GraphForward> forwards;
        forwards.reserve(selected.size());
        for (SampleId id : selected) {
            forwards.push_back(forward(split.train[static_cast<std::size_t>(id)], params));
        }

        if (t == 0 && config.mode == TrainMode::Unsupervised && config.method == Method::Gder) {
            // Seed the prototypes from the first epoch's embeddings; random
            // sphere directions far from the data cap collapse the
            // self-labeled clustering onto a single virtual class.
            std::vector<EmbeddingPoint> zs;
            zs.reserve(forwards.size());
            for (const GraphForward& fw : forwards) zs.push_back(fw.z);
            Rng data_init_rng(derive_seed(config.seed, "proto-data-init"));
            bank = PrototypeBank::init_from_embeddings(model_classes, config.protos_per_class,
                                                       zs, data_init_rng);
        }

        std::vector<int> batch_labels(selected.size());
        if (config.mode == TrainMode::Supervised) {
            for (std::size_t i = 0; i < selected.size(); ++i) {
                batch_labels[i] = label_of(split.train[static_cast<std::size_t>(selected[i])]);
            }
        } else {
            for (std::size_t i = 0; i < selected.size(); ++i) {
                batch_labels[i] = assign_class(forwards[i].z, bank, hcfg);
            }
        }

        ClusterConcentration conc;
        const bool needs_conc = config.mode == TrainMode::Unsupervised &&
                                config.method == Method::Gder && weights.lambda3 != 0.0;
        if (needs_conc) {
            std::vector<std::vector<Vec>> clusters(static_cast<std::size_t>(bank.size()));
            for (const GraphForward& fw : forwards) {
                clusters[static_cast<std::size_t>(nearest_prototype_index(fw.z, bank))]
                    .push_back(fw.z.vec);
            }
            conc = estimate_concentration(bank, clusters, config.alpha);
        }

        BackwardResult grads = backward(forwards, batch_labels, params, bank, hcfg, weights,
                                        config.mode, needs_conc ? &conc : nullptr);

        if (config.method == Method::Gder) {
            // Scores from this epoch's embeddings and the pre-update bank.
            std::vector<double> outlier_raw(selected.size());
            std::vector<double> familiarity_raw(selected.size());
            std::vector<double> balance_raw(selected.size());
            std::vector<int> assignments(selected.size());
            for (std::size_t i = 0; i < selected.size(); ++i) {
                assignments[i] = nearest_prototype_index(forwards[i].z, bank);
            }
            for (std::size_t i = 0; i < selected.size(); ++i) {
                outlier_raw[i] = outlier_score(forwards[i].z, batch_labels[i], bank, scfg);
                familiarity_raw[i] = familiarity_score(forwards[i].z, batch_labels[i], bank, hcfg);
                balance_raw[i] = balance_score(i, assignments);
            }
            const std::vector<SampleScores> scores =
                sampling_weights(outlier_raw, familiarity_raw, balance_raw, scfg);
            WeightMap new_weights;
            for (std::size_t i = 0; i < selected.size(); ++i) {
                new_weights[selected[i]] = scores[i].weight;
            }
            state = select_next_epoch(state, new_weights, sched, select_rng);
        }

        sgd_step(params, grads.encoder, config.lr);
        if (config.method == Method::Gder) {
            bank.grads = grads.proto;
            apply_prototype_update(bank, bank.grads, proto_lr);
        }

        const double wall = config.timing ? seconds_since(tic) : 0.0;
        result.total_wall_s += wall;

        if (t % config.eval_every == 0 || t == config.epochs - 1) {
            snap = evaluate(split.train, split.val, split.test, params, bank, hcfg, config.mode,
                            true_classes);
        }

        EpochMetrics row;
        row.epoch = t;
        row.wall_time_s = wall;
        row.train_acc = snap.train_acc;
        row.val_acc = snap.val_acc;
        row.test_acc = snap.test_acc;
        row.f1 = snap.f1;
        row.losses = grads.report;
        row.budget = static_cast<int>(selected.size());
        if (!selected.empty()) {
            int minority_count = 0, outlier_count = 0;
            for (SampleId id : selected) {
                const GraphSample& g = split.train[static_cast<std::size_t>(id)];
                if (g.label && *g.label == minority) ++minority_count;
                if (g.is_outlier) ++outlier_count;
            }
            row.minority_frac_selected =
                static_cast<double>(minority_count) / static_cast<double>(selected.size());
            row.outlier_frac_selected =
                static_cast<double>(outlier_count) / static_cast<double>(selected.size());
        }
        result.epochs.push_back(row);
    }

    result.final_train_acc = snap.train_acc;
    result.final_val_acc = snap.val_acc;
    result.final_test_acc = snap.test_acc;
    result.final_f1 = snap.f1;

    if (!config.out.empty()) {
        write_metrics_csv(config.out, result.epochs);
    }
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open CSV for writing: " + path);
    out << "epoch,wall_time_s,train_acc,val_acc,test_acc,f1_macro,loss_task,loss_comp,"
           "loss_sepa,loss_contra,loss_total,minority_frac_selected,outlier_frac_selected,"
           "budget\n";
    for (const EpochMetrics& row : rows) {
        out << row.epoch << ',' << format_double(row.wall_time_s, "%.6f") << ','
            << format_double(row.train_acc, "%.6f") << ',' << format_double(row.val_acc, "%.6f")
            << ',' << format_double(row.test_acc, "%.6f") << ',' << format_double(row.f1, "%.6f")
            << ',' << format_double(row.losses.task, "%.10g") << ','
            << format_double(row.losses.compactness, "%.10g") << ','
            << format_double(row.losses.separation, "%.10g") << ','
            << format_double(row.losses.contrastive, "%.10g") << ','
            << format_double(row.losses.total, "%.10g") << ','
            << format_double(row.minority_frac_selected, "%.6f") << ','
            << format_double(row.outlier_frac_selected, "%.6f") << ',' << row.budget << '\n';
    }
}

std::vector<EpochMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty CSV");
    std::vector<EpochMetrics> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 14) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 14 columns");
        }
        try {
            EpochMetrics row;
            row.epoch = std::stoi(cells[0]);
            row.wall_time_s = std::stod(cells[1]);
            row.train_acc = std::stod(cells[2]);
            row.val_acc = std::stod(cells[3]);
            row.test_acc = std::stod(cells[4]);
            row.f1 = std::stod(cells[5]);
            row.losses.task = std::stod(cells[6]);
            row.losses.compactness = std::stod(cells[7]);
            row.losses.separation = std::stod(cells[8]);
            row.losses.contrastive = std::stod(cells[9]);
            row.losses.total = std::stod(cells[10]);
            row.minority_frac_selected = std::stod(cells[11]);
            row.outlier_frac_selected = std::stod(cells[12]);
            row.budget = std::stoi(cells[13]);
            rows.push_back(row);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric cell");
        }
    }
    return rows;
}

std::string summary_json(const RunConfig& config, const RunResult& result) {
    std::ostringstream out;
    out << "{\"method\":\"" << method_name(config.method) << "\""
        << ",\"epochs\":" << config.epochs << ",\"budget\":" << result.budget
        << ",\"train_size\":" << result.train_size << ",\"final_test_acc\":"
        << format_double(result.final_test_acc, "%.6f") << ",\"final_f1_macro\":"
        << format_double(result.final_f1, "%.6f") << ",\"total_wall_time_s\":"
        << format_double(result.total_wall_s, "%.6f");
    if (!config.baseline_csv.empty()) {
        const std::vector<EpochMetrics> baseline = read_metrics_csv(config.baseline_csv);
        double baseline_wall = 0.0;
        for (const EpochMetrics& row : baseline) baseline_wall += row.wall_time_s;
        if (result.total_wall_s > 0.0) {
            out << ",\"speedup_vs_baseline\":"
                << format_double(baseline_wall / result.total_wall_s, "%.4f");
        }
    }
    out << "}";
    return out.str();
}

}  // namespace protoprune
